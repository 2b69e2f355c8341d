import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auggap import core
from auggap.errors import InvalidInputError


class TestEvaluateLoss:
    def test_squared_identity(self):
        spec = core.clipped_squared_loss(10.0)
        assert core.evaluate_loss(spec, [1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_squared_below_clip(self):
        spec = core.clipped_squared_loss(10.0)
        assert core.evaluate_loss(spec, [2.0, 0.0], [0.0, 0.0]) == 4.0

    def test_squared_clipping_active(self):
        spec = core.clipped_squared_loss(10.0)
        assert core.evaluate_loss(spec, [10.0, 0.0], [0.0, 0.0]) == 10.0

    def test_dimension_mismatch(self):
        spec = core.clipped_squared_loss(10.0)
        with pytest.raises(InvalidInputError):
            core.evaluate_loss(spec, [1.0, 2.0], [1.0])

    def test_cross_entropy(self):
        spec = core.clipped_cross_entropy_loss()
        assert spec.sub_gaussian_R == 5.0
        assert core.evaluate_loss(spec, [0.5, 0.5], 0) == pytest.approx(math.log(2.0))
        assert core.evaluate_loss(spec, [1.0, 0.0], 1) == 10.0  # -log 0 clipped

    def test_zero_one(self):
        spec = core.zero_one_loss()
        assert core.evaluate_loss(spec, [0.9, 0.1], 0) == 0.0
        assert core.evaluate_loss(spec, [0.9, 0.1], 1) == 1.0

    @given(
        pred=st.lists(st.floats(-50, 50), min_size=1, max_size=5),
        target=st.lists(st.floats(-50, 50), min_size=1, max_size=5),
        clip=st.floats(0.1, 100.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_loss_always_in_range(self, pred, target, clip):
        n = min(len(pred), len(target))
        spec = core.clipped_squared_loss(clip)
        value = core.evaluate_loss(spec, pred[:n], target[:n])
        assert 0.0 <= value <= clip


class TestSubGaussianConstant:
    def test_unit_interval(self):
        assert core.sub_gaussian_constant(0.0, 1.0) == 0.5

    def test_degenerate(self):
        assert core.sub_gaussian_constant(3.0, 3.0) == 0.0

    def test_matches_clipped_loss_rule(self):
        M = 7.5
        assert core.sub_gaussian_constant(0.0, M) == core.clipped_squared_loss(M).sub_gaussian_R

    def test_reversed_interval_rejected(self):
        with pytest.raises(InvalidInputError):
            core.sub_gaussian_constant(1.0, 0.0)


class TestEmpiricalCgfCheck:
    def test_constant_samples(self):
        result = core.empirical_cgf_check(np.full(2000, 3.2), R=0.1, lambda_grid=[-2, -1, 0, 1, 2])
        assert result["holds"]

    def test_standard_gaussian(self):
        rng = np.random.default_rng(0)
        samples = rng.standard_normal(20000)
        grid = np.linspace(-2.0, 2.0, 9)
        result = core.empirical_cgf_check(samples, R=1.0, lambda_grid=grid)
        assert result["holds"]
        # the empirical CGF itself should track lambda^2/2 closely
        centered = samples - samples.mean()
        psi = math.log(np.mean(np.exp(1.0 * centered)))
        assert psi == pytest.approx(0.5, abs=0.05)

    def test_uniform_hoeffding(self):
        rng = np.random.default_rng(1)
        result = core.empirical_cgf_check(
            rng.uniform(0, 1, 5000), R=0.5, lambda_grid=np.linspace(-4, 4, 17)
        )
        assert result["holds"]

    def test_too_small_r_fails(self):
        rng = np.random.default_rng(2)
        result = core.empirical_cgf_check(
            rng.standard_normal(20000), R=0.3, lambda_grid=[-2.0, 2.0]
        )
        assert not result["holds"]
        assert result["max_violation"] > 0

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            core.empirical_cgf_check([], R=1.0, lambda_grid=[1.0])


class TestBoundAssembly:
    def test_thm3_all_zero(self):
        report = core.assemble_bound_thm3(2.0, 0.0, 0.0, 3, [0.0, 0.0, 0.0], 5)
        assert report.total == 0.0

    def test_thm3_worked_example(self):
        report = core.assemble_bound_thm3(1.0, 0.08, 0.5, 100, [0.02] * 100, 10)
        assert report.term1 == pytest.approx(0.4, abs=1e-12)
        assert report.term2 == pytest.approx(0.1, abs=1e-12)
        assert report.term3 == pytest.approx(math.sqrt(0.004), abs=1e-12)
        assert report.total == pytest.approx(0.563246, abs=1e-6)

    def test_thm3_linear_in_r(self):
        a = core.assemble_bound_thm3(1.0, 0.1, 0.2, 2, [0.1, 0.3], 4)
        b = core.assemble_bound_thm3(2.0, 0.1, 0.2, 2, [0.1, 0.3], 4)
        assert b.total == pytest.approx(2 * a.total, rel=1e-12)

    def test_thm4_all_zero(self):
        report = core.assemble_bound_thm4(1.0, 0.0, [0.0], [[0.0]])
        assert report.total == 0.0

    def test_thm4_worked_example(self):
        report = core.assemble_bound_thm4(1.0, 0.0, [0.5, 0.5], [[0.0], [0.0]])
        assert report.total == pytest.approx(1.0, abs=1e-12)

    def test_thm4_term2_matches_thm3_for_equal_values(self):
        # with per-sample values all equal to I, thm4's term2 equals thm3's
        # term2 computed from dataset_mi = m * I
        m, value = 5, 0.07
        t4 = core.assemble_bound_thm4(1.0, 0.0, [value] * m, [[0.0]] * m)
        t3 = core.assemble_bound_thm3(1.0, 0.0, m * value, m, [0.0] * m, 1)
        assert t4.term2 == pytest.approx(t3.term2, rel=1e-12)

    def test_negative_inputs_rejected(self):
        with pytest.raises(InvalidInputError):
            core.assemble_bound_thm3(1.0, -0.1, 0.0, 1, [0.0], 1)
        with pytest.raises(InvalidInputError):
            core.assemble_bound_thm4(1.0, 0.0, [-0.2], [[0.0]])

    def test_total_consistency_invariant(self):
        report = core.assemble_bound_thm4(3.0, 0.3, [0.1, 0.4], [[0.2, 0.0], [0.1, 0.5]])
        assert report.total == pytest.approx(
            report.R * (report.term1 + report.term2 + report.term3), abs=1e-12
        )

    @given(
        r=st.floats(0.01, 10.0),
        c=st.floats(0.01, 10.0),
        kl=st.floats(0, 5.0),
        per=st.lists(st.floats(0, 5.0), min_size=1, max_size=6),
    )
    @settings(max_examples=100, deadline=None)
    def test_scale_covariance_in_r(self, r, c, kl, per):
        pairs = [[v / 2.0] for v in per]
        base = core.assemble_bound_thm4(r, kl, per, pairs)
        scaled = core.assemble_bound_thm4(c * r, kl, per, pairs)
        assert scaled.total == pytest.approx(c * base.total, rel=1e-9)

    def test_json_round_trip(self):
        report = core.assemble_bound_thm3(1.0, 0.08, 0.5, 2, [0.02, 0.01], 10)
        text = report.to_json()
        parsed = json.loads(text)
        for name in ("R", "kl_term_raw", "orbit_mi_raw", "aug_mi_raw",
                     "term1", "term2", "term3", "total", "theorem_tag"):
            assert name in parsed
        again = core.BoundReport.from_json(text)
        assert again.total == report.total

    def test_clamp_information(self):
        assert core.clamp_information(-0.3) == 0.0
        assert core.clamp_information(0.3) == 0.3
