import math

import numpy as np
import pytest

from auggap import geometry
from auggap.errors import InvalidInputError


class TestSampleTransform:
    def test_zero_strength_is_identity(self):
        policy = geometry.AugmentationPolicy(strength=0.0)
        params = geometry.sample_transform(policy, np.random.default_rng(0))
        assert params.is_identity

    def test_full_strength_ranges(self):
        policy = geometry.AugmentationPolicy(strength=1.0)
        rng = np.random.default_rng(1)
        angles, shifts = [], []
        for _ in range(10000):
            p = geometry.sample_transform(policy, rng, height=28, width=28)
            angles.append(math.degrees(p.angle_rad))
            shifts.append(p.shift_x)
        angles = np.asarray(angles)
        assert angles.min() >= -10.0 and angles.max() <= 10.0
        assert angles.max() - angles.min() >= 0.95 * 20.0
        shifts = np.asarray(shifts)
        assert np.abs(shifts).max() <= 28.0

    def test_deterministic_given_state(self):
        policy = geometry.AugmentationPolicy(strength=0.5)
        a = geometry.sample_transform(policy, np.random.default_rng(42))
        b = geometry.sample_transform(policy, np.random.default_rng(42))
        assert a == b

    def test_invalid_strength(self):
        with pytest.raises(InvalidInputError):
            geometry.AugmentationPolicy(strength=1.5)


class TestApplyAffine:
    def test_identity_bit_exact(self):
        img = np.random.default_rng(0).uniform(size=(28, 28))
        out = geometry.apply_affine(img, geometry.TransformParams(0.0, 0.0, 0.0))
        assert np.array_equal(out, img)

    def test_integer_shift(self):
        img = np.random.default_rng(1).uniform(size=(16, 16))
        out = geometry.apply_affine(img, geometry.TransformParams(0.0, 1.0, 0.0))
        assert np.allclose(out[:, 1:], img[:, :-1], atol=1e-12)
        assert np.all(out[:, 0] == 0.0)

    def test_rotating_flat_disk_fixes_interior(self):
        size = 41
        yy, xx = np.mgrid[0:size, 0:size]
        r = np.hypot(yy - 20, xx - 20)
        disk = (r <= 15).astype(float)
        for angle in (0.3, 1.1, 2.5):
            out = geometry.apply_affine(disk, geometry.TransformParams(angle, 0.0, 0.0))
            interior = r <= 12  # stay clear of the boundary ring
            assert np.abs(out - disk)[interior].max() < 1e-6

    def test_zero_image_preserved(self):
        out = geometry.apply_affine(
            np.zeros((9, 9)), geometry.TransformParams(0.7, 2.3, -1.1)
        )
        assert np.all(out == 0.0)

    def test_non_finite_rejected(self):
        img = np.zeros((4, 4))
        img[1, 1] = np.nan
        with pytest.raises(InvalidInputError):
            geometry.apply_affine(img, geometry.TransformParams(0.1, 0.0, 0.0))


class TestGroupDiameter:
    def test_identity_policy_exact_zero(self):
        policy = geometry.AugmentationPolicy(strength=0.0)
        imgs = [np.random.default_rng(k).uniform(size=(8, 8)) for k in range(3)]
        est = geometry.group_diameter(policy, imgs, 50, np.random.default_rng(0))
        assert est.delta_hat == 0.0

    def test_abstract_translation(self):
        tau = np.array([0.3, -0.4])
        est = geometry.group_diameter(
            lambda z, rng: z + tau,
            [np.zeros(2), np.ones(2), np.array([5.0, -2.0])],
            10,
            np.random.default_rng(1),
        )
        assert est.delta_hat == pytest.approx(0.5, abs=1e-12)

    def test_full_circle_rotation_on_unit_disk(self):
        def rotate(z, rng, count):
            theta = rng.uniform(-math.pi, math.pi, size=count)
            c, s = np.cos(theta), np.sin(theta)
            return np.stack([c * z[0] - s * z[1], s * z[0] + c * z[1]], axis=1)

        rotate.batched = True
        points = [np.array([0.25, 0.0]), np.array([1.0, 0.0]), np.array([0.0, -1.0])]
        est = geometry.group_diameter(rotate, points, 4_000_000, np.random.default_rng(5))
        assert est.delta_hat == pytest.approx(4.0 / math.pi, abs=1e-3)
        assert est.argmax_point_id in (1, 2)

    def test_monotone_in_strength_on_images(self):
        rng = np.random.default_rng(3)
        imgs = [rng.uniform(size=(20, 20)) for _ in range(4)]
        deltas = []
        for strength in (0.0, 0.25, 0.5, 0.75, 1.0):
            policy = geometry.AugmentationPolicy(strength=strength)
            est = geometry.group_diameter(policy, imgs, 60, np.random.default_rng(9))
            deltas.append(est.delta_hat)
        assert all(b >= a - 1e-9 for a, b in zip(deltas, deltas[1:]))

    def test_empty_points_rejected(self):
        with pytest.raises(InvalidInputError):
            geometry.group_diameter(lambda z, rng: z, [], 5, np.random.default_rng(0))

    def test_report_serialization(self):
        policy = geometry.AugmentationPolicy(strength=0.5)
        est = geometry.group_diameter(
            policy, [np.zeros((6, 6))], 4, np.random.default_rng(2)
        )
        d = est.to_dict()
        assert set(d) == {"delta_hat", "strength", "metric", "num_points", "inner_mc", "argmax_point_id"}


class TestProp1Circle:
    def test_uniform_density(self):
        r = geometry.prop1_circle_check(0.0)
        assert r["kl"] == 0.0
        assert r["lipschitz_Lp"] == pytest.approx(0.0, abs=1e-9)
        assert r["holds"]

    def test_half_amplitude_against_quadrature(self):
        from scipy.integrate import quad

        r = geometry.prop1_circle_check(0.5)
        a = 0.5
        oracle, _ = quad(
            lambda phi: (1 + a * math.sin(phi)) / (2 * math.pi) * math.log(1 + a * math.sin(phi)),
            0.0,
            2 * math.pi,
            epsabs=1e-12,
        )
        assert r["kl"] == pytest.approx(oracle, abs=1e-8)
        assert r["kl"] == pytest.approx(0.0645, abs=0.002)
        assert r["delta"] == pytest.approx(math.pi / 2, abs=1e-9)
        assert r["bound"] == pytest.approx(a * math.pi / 2, rel=1e-4)
        assert r["holds"]

    def test_kl_monotone_in_amplitude(self):
        values = [geometry.prop1_circle_check(a)["kl"] for a in np.arange(0.1, 0.95, 0.1)]
        assert all(b > a for a, b in zip(values, values[1:]))
        # small-amplitude expansion: kl ~ a^2 / 4
        assert values[0] == pytest.approx(0.1**2 / 4, rel=0.2)

    def test_bound_holds_across_grid(self):
        for a in np.arange(0.1, 0.95, 0.1):
            r = geometry.prop1_circle_check(float(a))
            assert r["holds"]
            assert r["kl"] <= a * math.pi / 2 + 1e-9

    def test_invalid_amplitude(self):
        with pytest.raises(InvalidInputError):
            geometry.prop1_circle_check(1.0)
        with pytest.raises(InvalidInputError):
            geometry.prop1_circle_check(0.5, grid_size=100)
