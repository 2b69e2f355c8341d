"""Closed-form bound terms for the Gaussian mean-estimation model.

The model: m base samples Z_i ~ N(mu, s2 I_d), n shared additive
perturbations G_j ~ N(0, t2 I_d), and the averaging learner

    W = (1/(mn)) sum_ij (Z_i + G_j) + eps,   eps ~ N(0, nu2 I_d),

so W = mean(Z) + mean(G) + eps. All information quantities are per the
isotropic structure: compute the scalar value and multiply by d.

``orbit_mi_per_sample`` evaluates the published closed form. Its printed
simplification disagrees with the covariance structure of the learner above
whenever t2 > 0 (the t2/n terms should read m^2 t2 / n);
``orbit_mi_from_covariance`` computes the exact value from the covariance
bookkeeping and is the oracle the Monte-Carlo tests check against. The two
coincide at t2 = 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import BoundReport
from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class GaussianSetting:
    d: int = 1
    m: int = 2
    n: int = 1
    s2: float = 1.0
    t2: float = 0.0
    nu2: float = 0.0
    mu: np.ndarray | None = None
    clip_M: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.m < 1 or self.n < 1:
            raise InvalidInputError("d, m, n must be positive integers")
        if not (self.s2 > 0) or self.t2 < 0 or self.nu2 < 0:
            raise InvalidInputError("need s2 > 0 and t2, nu2 >= 0")
        mu = np.zeros(self.d) if self.mu is None else np.asarray(self.mu, dtype=float)
        if mu.shape != (self.d,):
            raise InvalidInputError("mu must have length d")
        object.__setattr__(self, "mu", mu)

    @property
    def R(self) -> float:
        return self.clip_M / 2.0


def kl_shift(setting: GaussianSetting) -> float:
    """KL between the data distribution and its augmented counterpart.

    (d/2) (rho - 1 - log rho) with rho = s2 / (s2 + t2).
    """
    if setting.t2 == 0:
        return 0.0
    rho = setting.s2 / (setting.s2 + setting.t2)
    return 0.5 * setting.d * (rho - 1.0 - math.log(rho))


def kl_shift_quadrature(setting: GaussianSetting, tol: float = 1e-10) -> float:
    """Oracle: numerically integrate the per-coordinate KL density.

    Adaptive quadrature over +-12 combined standard deviations, times d.
    """
    s2 = setting.s2
    v2 = setting.s2 + setting.t2
    if setting.t2 == 0:
        return 0.0

    def integrand(x):
        logp = -0.5 * x * x / s2 - 0.5 * math.log(2 * math.pi * s2)
        logq = -0.5 * x * x / v2 - 0.5 * math.log(2 * math.pi * v2)
        return math.exp(logp) * (logp - logq)

    half_width = 12.0 * math.sqrt(v2)
    value, _ = integrate.quad(integrand, -half_width, half_width, epsabs=tol, epsrel=tol, limit=200)
    return setting.d * value


def orbit_mi_per_sample(setting: GaussianSetting) -> float:
    """Per-sample information term, published closed form.

    (d/2) log[(m (s2 + t2/(mn)) + m^2 nu2) / ((m-1) s2 + t2/n + m^2 nu2)].
    Returns inf at the degenerate corner m = 1, t2 = nu2 = 0.
    """
    m, n = setting.m, setting.n
    num = m * (setting.s2 + setting.t2 / (m * n)) + m * m * setting.nu2
    den = (m - 1) * setting.s2 + setting.t2 / n + m * m * setting.nu2
    if den <= 0:
        return math.inf
    return 0.5 * setting.d * math.log(num / den)


def orbit_mi_from_covariance(setting: GaussianSetting) -> float:
    """Exact I(Z_1; W) of the averaging learner, from its covariance structure.

    Var(W) = s2/m + t2/n + nu2, Cov(Z_1, W) = s2/m per coordinate.
    """
    m, n = setting.m, setting.n
    var_w = setting.s2 / m + setting.t2 / n + setting.nu2
    cov = setting.s2 / m
    resid = var_w - cov * cov / setting.s2
    if resid <= 0:
        return math.inf
    return 0.5 * setting.d * math.log(var_w / resid)


def aug_mi_per_pair(setting: GaussianSetting) -> float:
    """Per-augmentation information term, closed form.

    (d/2) log(1 + (t2/n^2) / ((n-1) t2/n^2 + (m-1) s2/m^2 + nu2)); 0 at t2 = 0.
    """
    if setting.t2 == 0:
        return 0.0
    m, n = setting.m, setting.n
    signal = setting.t2 / (n * n)
    noise = (n - 1) * setting.t2 / (n * n) + (m - 1) * setting.s2 / (m * m) + setting.nu2
    if noise <= 0:
        return math.inf
    return 0.5 * setting.d * math.log1p(signal / noise)


def corollary1_bound(setting: GaussianSetting, R: float) -> BoundReport:
    """Assemble the closed-form three-term bound, each term sqrt(2 I)."""
    if not (R > 0):
        raise InvalidInputError("R must be positive")
    kl = kl_shift(setting)
    orbit = orbit_mi_per_sample(setting)
    aug = aug_mi_per_pair(setting)
    infinite = [name for name, v in (("orbit_mi", orbit), ("aug_mi", aug)) if math.isinf(v)]
    term1 = math.sqrt(2.0 * kl)
    term2 = math.inf if math.isinf(orbit) else math.sqrt(2.0 * orbit)
    term3 = math.inf if math.isinf(aug) else math.sqrt(2.0 * aug)
    total = R * (term1 + term2 + term3)
    return BoundReport(
        R=R,
        kl_term_raw=kl,
        orbit_mi_raw=orbit,
        aug_mi_raw=aug,
        term1=term1,
        term2=term2,
        term3=term3,
        total=total,
        theorem_tag="thm4",
        diagnostics={"infinite_information": infinite, "setting": _setting_dict(setting)},
    )


def _setting_dict(setting: GaussianSetting) -> dict:
    return {
        "d": setting.d,
        "m": setting.m,
        "n": setting.n,
        "s2": setting.s2,
        "t2": setting.t2,
        "nu2": setting.nu2,
        "clip_M": setting.clip_M,
    }


def simulate_learner(setting: GaussianSetting, seed: int, reps: int):
    """Draw (Z_1, G_1, W) triples from the averaging learner.

    Returns arrays of shape (reps, d). The n perturbations are shared across
    the m samples, matching the closed-form covariance bookkeeping.
    """
    if reps < 1:
        raise InvalidInputError("reps must be >= 1")
    rng = np.random.default_rng(seed)
    d, m, n = setting.d, setting.m, setting.n
    z = setting.mu + math.sqrt(setting.s2) * rng.standard_normal((reps, m, d))
    g = math.sqrt(setting.t2) * rng.standard_normal((reps, n, d))
    eps = math.sqrt(setting.nu2) * rng.standard_normal((reps, d))
    w = z.mean(axis=1) + g.mean(axis=1) + eps
    return z[:, 0, :], g[:, 0, :], w


def mc_gaussian_mi(x: np.ndarray, y: np.ndarray) -> float:
    """Gaussian MI estimate from per-coordinate sample correlations.

    For jointly Gaussian pairs, I = sum_k -0.5 log(1 - rho_k^2).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 1:
        x, y = x.T, y.T
    if x.shape != y.shape:
        raise InvalidInputError("paired samples must have identical shapes")
    if x.shape[0] < 1000:
        raise InvalidInputError("need >= 1e3 paired samples")
    total = 0.0
    for k in range(x.shape[1]):
        xc = x[:, k] - x[:, k].mean()
        yc = y[:, k] - y[:, k].mean()
        denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
        rho = float(xc @ yc) / denom if denom > 0 else 0.0
        if abs(rho) >= 1.0:
            warnings.warn("sample correlation clamped below 1", stacklevel=2)
            rho = math.copysign(1.0 - 1e-12, rho)
        total += -0.5 * math.log1p(-rho * rho)
    return total


def mc_gaussian_conditional_mi(x: np.ndarray, y: np.ndarray, given: np.ndarray) -> float:
    """Gaussian conditional MI estimate I(X;Y | Z) via partial correlations.

    Used as the Monte-Carlo oracle for the per-augmentation term, which
    conditions on the paired data sample. Per coordinate,
    rho_xy.z = (rho_xy - rho_xz rho_yz) / sqrt((1-rho_xz^2)(1-rho_yz^2)).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    z = np.atleast_2d(np.asarray(given, dtype=float))
    if x.shape[0] == 1:
        x, y, z = x.T, y.T, z.T
    if not (x.shape == y.shape == z.shape):
        raise InvalidInputError("all three sample tables must have identical shapes")
    if x.shape[0] < 1000:
        raise InvalidInputError("need >= 1e3 samples")
    total = 0.0
    for k in range(x.shape[1]):
        cols = np.corrcoef(np.stack([x[:, k], y[:, k], z[:, k]]))
        r_xy, r_xz, r_yz = cols[0, 1], cols[0, 2], cols[1, 2]
        denom = math.sqrt(max((1 - r_xz**2) * (1 - r_yz**2), 1e-24))
        rho = (r_xy - r_xz * r_yz) / denom
        if abs(rho) >= 1.0:
            warnings.warn("partial correlation clamped below 1", stacklevel=2)
            rho = math.copysign(1.0 - 1e-12, rho)
        total += -0.5 * math.log1p(-rho * rho)
    return total


@dataclass
class SweepRow:
    t2: float
    n: int
    m: int
    kl_nats: float
    orbit_mi_nats: float
    aug_mi_nats: float
    term1: float
    term2: float
    term3: float
    total: float
    flags: str = ""


def figure1_sweep(
    base: GaussianSetting,
    t2_grid,
    n_grid,
    m_grid,
    R: float,
) -> list[SweepRow]:
    """Evaluate the four bound components over a t2 sweep and an (n, m) sweep.

    The t2 rows hold (n, m) at the base setting; the (n, m) rows hold t2 at
    the base value. One row per grid point, |t2_grid| + |n_grid| * |m_grid|
    rows in total.
    """
    t2_grid = list(t2_grid)
    n_grid = list(n_grid)
    m_grid = list(m_grid)
    if not t2_grid or not n_grid or not m_grid:
        raise InvalidInputError("grids must be nonempty")
    rows = []
    for t2 in t2_grid:
        rows.append(_sweep_row(_replace(base, t2=float(t2)), R))
    for m in m_grid:
        for n in n_grid:
            rows.append(_sweep_row(_replace(base, n=int(n), m=int(m)), R))
    return rows


def _replace(base: GaussianSetting, **kw) -> GaussianSetting:
    cfg = _setting_dict(base)
    cfg.pop("clip_M")
    cfg.update(kw)
    return GaussianSetting(clip_M=base.clip_M, **cfg)


def _sweep_row(setting: GaussianSetting, R: float) -> SweepRow:
    report = corollary1_bound(setting, R)
    flags = ",".join(report.diagnostics["infinite_information"])
    return SweepRow(
        t2=setting.t2,
        n=setting.n,
        m=setting.m,
        kl_nats=report.kl_term_raw,
        orbit_mi_nats=report.orbit_mi_raw,
        aug_mi_nats=report.aug_mi_raw,
        term1=report.term1,
        term2=report.term2,
        term3=report.term3,
        total=report.total,
        flags="infinite_information:" + flags if flags else "",
    )
