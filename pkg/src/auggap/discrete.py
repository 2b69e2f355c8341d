"""Exact enumeration over finite data/group/hypothesis worlds.

Everything here is computed by explicit summation, so these routines serve as
ground-truth oracles for the identities and inequalities that the bound
machinery relies on: the three-term gap decomposition, information
contraction under orbit averaging, reverse-Pinsker style controls, the
per-sample versus dataset-level comparison, and the basic information lemmas.

Conventions: supports are 0..k-1; the learning channel is a table
P(w | z, g); a dataset/augmentation pair (S, E) induces the mixture learner
P(w | S, E) = mean_{i,j} P(w | z_i, g_j). Total variation is the sup-set
convention, half the L1 distance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundUndefinedError,
    DivergenceUndefinedError,
    EnumerationTooLargeError,
    InvalidInputError,
    PreconditionViolatedError,
)

PROB_ATOL = 1e-12
ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class DiscreteDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("probs must be a nonempty vector")
        if np.any(p < 0):
            raise InvalidInputError("probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > PROB_ATOL * max(1, p.size):
            raise InvalidInputError(f"probabilities sum to {p.sum()}, not 1")

    @property
    def support_size(self) -> int:
        return self.probs.size


def _as_probs(dist) -> np.ndarray:
    if isinstance(dist, DiscreteDistribution):
        return dist.probs
    return DiscreteDistribution(np.asarray(dist, dtype=float)).probs


def kl_discrete(P, Q) -> float:
    """KL(P || Q) in nats with the 0 log 0 = 0 convention."""
    p, q = _as_probs(P), _as_probs(Q)
    if p.size != q.size:
        raise InvalidInputError("support sizes differ")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise DivergenceUndefinedError("P is not absolutely continuous w.r.t. Q")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def tv_discrete(P, Q) -> float:
    """Sup-set total variation, half the L1 distance."""
    p, q = _as_probs(P), _as_probs(Q)
    if p.size != q.size:
        raise InvalidInputError("support sizes differ")
    return 0.5 * float(np.abs(p - q).sum())


def mutual_information_exact(joint) -> float:
    """I(X;Y) of a joint probability table, by direct summation."""
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise InvalidInputError("joint must be a matrix")
    if np.any(j < 0):
        raise InvalidInputError("joint entries must be nonnegative")
    if abs(float(j.sum()) - 1.0) > PROB_ATOL * max(1, j.size):
        raise InvalidInputError(f"joint sums to {j.sum()}, not 1")
    px = j.sum(axis=1)
    py = j.sum(axis=0)
    mask = j > 0
    prod = np.outer(px, py)
    return float(np.sum(j[mask] * np.log(j[mask] / prod[mask])))


def verify_reverse_pinsker(P, Q) -> dict:
    """Evaluate KL against TV^2/q_min in both constant conventions.

    ``paper_bound`` uses the sup-set TV as printed; ``corrected_bound`` uses
    the unhalved L1 distance, (2 tv)^2 / q_min, which is the convention under
    which the inequality survives two-point stress tests.
    """
    p, q = _as_probs(P), _as_probs(Q)
    q_min = float(q.min())
    if q_min <= 0:
        raise InvalidInputError("Q must be strictly positive")
    kl = kl_discrete(p, q)
    tv = tv_discrete(p, q)
    paper_bound = tv * tv / q_min
    corrected_bound = (2.0 * tv) ** 2 / q_min
    return {
        "kl": kl,
        "tv": tv,
        "q_min": q_min,
        "paper_bound": paper_bound,
        "corrected_bound": corrected_bound,
        "paper_holds": kl <= paper_bound + PROB_ATOL,
        "corrected_holds": kl <= corrected_bound + PROB_ATOL,
    }


# ---------------------------------------------------------------------------
# Finite worlds
# ---------------------------------------------------------------------------

@dataclass
class DiscreteWorld:
    """A finite data/group/hypothesis world with exact distribution tables.

    group_table[g, z] is the action of element g on point z (each row a
    permutation of the data support). channel[z, g, :] is the learning
    channel P(w | z, g). loss_table[w, z] holds a bounded loss, and metric is
    a symmetric zero-diagonal table on the data support.
    """

    data_dist: DiscreteDistribution
    aug_dist: DiscreteDistribution
    group_table: np.ndarray
    channel: np.ndarray
    loss_table: np.ndarray
    metric: np.ndarray
    identity_index: int | None = field(init=False, default=None)
    metric_triangle_ok: bool = field(init=False, default=True)

    def __post_init__(self):
        self.group_table = np.asarray(self.group_table, dtype=int)
        self.channel = np.asarray(self.channel, dtype=float)
        self.loss_table = np.asarray(self.loss_table, dtype=float)
        self.metric = np.asarray(self.metric, dtype=float)
        nz, ng = self.num_z, self.num_g
        if self.group_table.shape != (ng, nz):
            raise InvalidInputError("group_table must have shape (|G|, |Z|)")
        for g in range(ng):
            row = self.group_table[g]
            if sorted(row.tolist()) != list(range(nz)):
                raise InvalidInputError(f"group_table row {g} is not a permutation")
            if np.array_equal(row, np.arange(nz)):
                self.identity_index = g
        if self.channel.shape[:2] != (nz, ng):
            raise InvalidInputError("channel must have shape (|Z|, |G|, |W|)")
        row_sums = self.channel.sum(axis=2)
        if np.any(self.channel < 0) or np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise InvalidInputError("each channel row must be a distribution")
        if self.loss_table.shape != (self.num_w, nz):
            raise InvalidInputError("loss_table must have shape (|W|, |Z|)")
        if np.any(self.loss_table < 0):
            raise InvalidInputError("losses must be nonnegative")
        if self.metric.shape != (nz, nz):
            raise InvalidInputError("metric must be |Z| x |Z|")
        if np.any(np.abs(np.diag(self.metric)) > 0) or not np.allclose(self.metric, self.metric.T):
            raise InvalidInputError("metric must be symmetric with zero diagonal")
        if np.any(self.metric < 0):
            raise InvalidInputError("metric must be nonnegative")
        d = self.metric
        # d[i,k] + d[k,j] >= d[i,j] (d is symmetric, so d[j,k] == d[k,j])
        self.metric_triangle_ok = bool(
            np.all(d[:, None, :] + d[None, :, :] >= d[:, :, None] - 1e-12)
        )

    @property
    def num_z(self) -> int:
        return self.data_dist.support_size

    @property
    def num_g(self) -> int:
        return self.aug_dist.support_size

    @property
    def num_w(self) -> int:
        return self.channel.shape[2]

    def act(self, g: int, z: int) -> int:
        return int(self.group_table[g, z])

    def data_dist_is_invariant(self, atol: float = PROB_ATOL) -> bool:
        p = self.data_dist.probs
        return all(
            np.allclose(p[self.group_table[g]], p, atol=atol) for g in range(self.num_g)
        )


def cyclic_group_table(nz: int, ng: int) -> np.ndarray:
    """Cyclic shift action of Z_ng on Z_nz (requires ng | nz); row 0 is identity."""
    if nz % ng != 0:
        raise InvalidInputError("group order must divide the data support size")
    step = nz // ng
    return np.array([[(z + g * step) % nz for z in range(nz)] for g in range(ng)], dtype=int)


def random_symmetric_metric(rng: np.random.Generator, nz: int) -> np.ndarray:
    m = rng.uniform(0.1, 1.0, size=(nz, nz))
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    return m


def random_world(
    seed: int,
    nz: int = 4,
    ng: int = 2,
    nw: int = 3,
    loss_clip: float = 1.0,
) -> DiscreteWorld:
    """Seeded full-support world: Dirichlet(1) distributions and channel rows."""
    rng = np.random.default_rng(seed)
    data = DiscreteDistribution(rng.dirichlet(np.ones(nz)))
    aug = DiscreteDistribution(rng.dirichlet(np.ones(ng)))
    channel = rng.dirichlet(np.ones(nw), size=(nz, ng))
    loss = rng.uniform(0.0, loss_clip, size=(nw, nz))
    metric = random_symmetric_metric(rng, nz)
    return DiscreteWorld(data, aug, cyclic_group_table(nz, ng), channel, loss, metric)


def random_invariant_world(
    seed: int,
    nz: int = 4,
    ng: int = 2,
    nw: int = 3,
    uniform_aug: bool = False,
) -> DiscreteWorld:
    """World with a G-invariant data distribution and an orbit-form channel.

    The channel is P(w | z, g) = base(w | g z), the structure required by the
    orbit-contraction identity.
    """
    rng = np.random.default_rng(seed)
    table = cyclic_group_table(nz, ng)
    step = nz // ng
    orbit_mass = rng.dirichlet(np.ones(step))
    data = np.empty(nz)
    for z in range(nz):
        data[z] = orbit_mass[z % step] / ng
    aug = np.full(ng, 1.0 / ng) if uniform_aug else rng.dirichlet(np.ones(ng))
    base = rng.dirichlet(np.ones(nw), size=nz)
    channel = np.empty((nz, ng, nw))
    for z in range(nz):
        for g in range(ng):
            channel[z, g] = base[table[g, z]]
    loss = rng.uniform(0.0, 1.0, size=(nw, nz))
    metric = random_symmetric_metric(rng, nz)
    return DiscreteWorld(
        DiscreteDistribution(data), DiscreteDistribution(aug), table, channel, loss, metric
    )


# ---------------------------------------------------------------------------
# Gap decomposition
# ---------------------------------------------------------------------------

def _mixture_learner(world: DiscreteWorld, S, E) -> np.ndarray:
    """P(w | S, E) of the mixture learner over augmented examples."""
    rows = [world.channel[z, g] for z in S for g in E]
    return np.mean(rows, axis=0)


def gen_gap_decomposition_exact(world: DiscreteWorld, m: int, n: int) -> dict:
    """Enumerate the three-term decomposition of the expected gap.

    Returns the expected distribution-shift, orbit-level, and approximation
    terms together with the directly enumerated gap; the sum of the three
    terms equals the direct gap identically.
    """
    nz, ng, nw = world.num_z, world.num_g, world.num_w
    if m < 1 or n < 1:
        raise InvalidInputError("m and n must be positive")
    if (nz**m) * (ng**n) > ENUMERATION_GUARD:
        raise EnumerationTooLargeError(
            f"|Z|^m * |G|^n = {(nz ** m) * (ng ** n)} exceeds {ENUMERATION_GUARD}"
        )

    pz = world.data_dist.probs
    pg = world.aug_dist.probs
    # loss_g[g][w, z] = loss(w, g z)
    loss_g = np.stack([world.loss_table[:, world.group_table[g]] for g in range(ng)])
    loss_orbit = np.tensordot(pg, loss_g, axes=(0, 0))  # E_G loss(w, G z)
    L_D = world.loss_table @ pz  # per w
    L_DGD = loss_orbit @ pz  # per w

    term1 = term2 = term3 = direct = 0.0
    for S in itertools.product(range(nz), repeat=m):
        p_s = float(np.prod(pz[list(S)]))
        L_DGS = np.mean([loss_orbit[:, z] for z in S], axis=0)  # per w
        for E in itertools.product(range(ng), repeat=n):
            p_e = float(np.prod(pg[list(E)]))
            weight = p_s * p_e
            post = _mixture_learner(world, S, E)
            L_ES = np.mean([loss_g[g][:, z] for z in S for g in E], axis=0)
            term1 += weight * float(post @ (L_D - L_DGD))
            term2 += weight * float(post @ (L_DGD - L_DGS))
            term3 += weight * float(post @ (L_DGS - L_ES))
            direct += weight * float(post @ (L_D - L_ES))
    return {
        "term1": term1,
        "term2": term2,
        "term3": term3,
        "sum": term1 + term2 + term3,
        "direct_gap": direct,
    }


# ---------------------------------------------------------------------------
# Orbit-averaging contraction
# ---------------------------------------------------------------------------

def orbit_contraction_check(world: DiscreteWorld) -> dict:
    """Verify that orbit averaging contracts I(Z;W) by exactly the expected KL.

    Requires a G-invariant data distribution and a channel of the form
    P(w | z, g) = base(w | g z).
    """
    if not world.data_dist_is_invariant():
        raise PreconditionViolatedError("data_dist is not invariant under the group action")
    if world.identity_index is None:
        raise PreconditionViolatedError("group_table has no identity row")
    e = world.identity_index
    base = world.channel[:, e, :]  # base(w | z)
    for g in range(world.num_g):
        expected = base[world.group_table[g]]
        if not np.allclose(world.channel[:, g, :], expected, atol=1e-9):
            raise PreconditionViolatedError("channel is not of the form P(w | g z)")

    pz = world.data_dist.probs
    pg = world.aug_dist.probs
    smoothed = np.einsum("g,zgw->zw", pg, base[world.group_table].transpose(1, 0, 2))
    mi_plain = mutual_information_exact(pz[:, None] * base)
    mi_orbit = mutual_information_exact(pz[:, None] * smoothed)
    expected_kl = 0.0
    for z in range(world.num_z):
        for g in range(world.num_g):
            expected_kl += pz[z] * pg[g] * kl_discrete(base[world.group_table[g, z]], smoothed[z])
    difference = mi_plain - mi_orbit
    equal = abs(difference - expected_kl) < 1e-12 and difference >= -1e-12
    return {
        "mi_plain": mi_plain,
        "mi_orbit": mi_orbit,
        "difference": difference,
        "expected_kl": expected_kl,
        "equal": bool(equal),
    }


# ---------------------------------------------------------------------------
# Augmentation-sensitivity bounds at a fixed data point
# ---------------------------------------------------------------------------

def group_diameter_discrete(world: DiscreteWorld) -> float:
    """max_z E_G d(z, G z) on the world's finite support."""
    pg = world.aug_dist.probs
    return float(
        max(
            sum(pg[g] * world.metric[z, world.group_table[g, z]] for g in range(world.num_g))
            for z in range(world.num_z)
        )
    )


def _conditional_at(world: DiscreteWorld, z: int):
    if not (0 <= z < world.num_z):
        raise InvalidInputError(f"z={z} outside the data support")
    pg = world.aug_dist.probs
    if float(pg.min()) <= 0:
        raise InvalidInputError("augmentation distribution must be strictly positive")
    cond = world.channel[z]  # (|G|, |W|)
    marginal = pg @ cond
    return pg, cond, marginal


def lipschitz_constant_tv(world: DiscreteWorld, z: int) -> float:
    """Empirical TV-Lipschitz constant of g -> P(. | z, g) w.r.t. d(gz, g'z)."""
    _, cond, _ = _conditional_at(world, z)
    best = 0.0
    for g1 in range(world.num_g):
        for g2 in range(g1 + 1, world.num_g):
            disp = float(world.metric[world.act(g1, z), world.act(g2, z)])
            if disp > 0:
                best = max(best, tv_discrete(cond[g1], cond[g2]) / disp)
    return best


def prop3_bound_check(world: DiscreteWorld, z: int) -> dict:
    """Exact augmentation information at z against the quadratic diameter bound.

    paper_bound is C^2 Delta^2 / delta_z as printed; corrected_bound carries
    the factor 4 implied by the L1-convention reverse Pinsker.
    """
    pg, cond, marginal = _conditional_at(world, z)
    delta_z = float(pg.min()) * float(marginal.min())
    if delta_z <= 0:
        raise BoundUndefinedError("minimal joint probability delta_z is zero")
    C = lipschitz_constant_tv(world, z)
    delta_g = group_diameter_discrete(world)
    exact = mutual_information_exact(pg[:, None] * cond)
    paper_bound = C * C * delta_g * delta_g / delta_z
    corrected_bound = 4.0 * paper_bound
    return {
        "exact_aug_mi": exact,
        "lipschitz_C": C,
        "delta_G": delta_g,
        "delta_z": delta_z,
        "paper_bound": paper_bound,
        "corrected_bound": corrected_bound,
        "paper_holds": bool(exact <= paper_bound + PROB_ATOL),
        "corrected_holds": bool(exact <= corrected_bound + PROB_ATOL),
    }


def prop4_bound_check(world: DiscreteWorld, z: int) -> dict:
    """Bounded-density-ratio control of the augmentation information at z.

    The printed constant is (sqrt(beta)/2) * TV with sup-set TV; the corrected
    form uses the unhalved L1 distance, i.e. sqrt(beta) * TV.
    """
    pg, cond, marginal = _conditional_at(world, z)
    if float(marginal.min()) <= 0:
        raise BoundUndefinedError("marginal P(w|z) must be strictly positive")
    joint = pg[:, None] * cond
    product = pg[:, None] * marginal[None, :]
    beta = float(np.max(joint / product))
    tv = 0.5 * float(np.abs(joint - product).sum())
    exact = mutual_information_exact(joint)
    paper_bound = 0.5 * math.sqrt(beta) * tv
    corrected_bound = math.sqrt(beta) * tv
    return {
        "exact_aug_mi": exact,
        "beta": beta,
        "tv": tv,
        "paper_bound": paper_bound,
        "corrected_bound": corrected_bound,
        "paper_holds": exact <= paper_bound + PROB_ATOL,
        "corrected_holds": exact <= corrected_bound + PROB_ATOL,
    }


# ---------------------------------------------------------------------------
# Per-sample versus dataset-level information
# ---------------------------------------------------------------------------

def per_sample_vs_dataset_mi_from_channel(data_dist, dataset_channel: np.ndarray, m: int = 2) -> dict:
    """Compare (1/m) sum_i sqrt(2 I(Z_i;W)) against sqrt((2/m) I(S;W)).

    dataset_channel maps each dataset (one axis per sample, each of size |Z|)
    to a distribution over W: shape (|Z|,)*m + (|W|,).
    """
    pz = _as_probs(data_dist)
    nz = pz.size
    k = np.asarray(dataset_channel, dtype=float)
    if k.shape[:m] != (nz,) * m:
        raise InvalidInputError("dataset_channel shape does not match m samples over |Z|")
    nw = k.shape[-1]

    p_s = pz
    for _ in range(m - 1):
        p_s = np.multiply.outer(p_s, pz)
    joint_sw = p_s[..., None] * k  # (|Z|,)*m + (|W|,)
    i_s = mutual_information_exact(joint_sw.reshape(nz**m, nw))

    per_sample = []
    for i in range(m):
        axes = tuple(a for a in range(m) if a != i)
        j_i = joint_sw.sum(axis=axes)
        per_sample.append(mutual_information_exact(j_i))
    lhs = float(np.mean([math.sqrt(2.0 * v) for v in per_sample]))
    rhs = math.sqrt(2.0 * i_s / m)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "per_sample_mi": per_sample,
        "dataset_mi": i_s,
        "holds": lhs <= rhs + 1e-12,
    }


def world_dataset_channel(world: DiscreteWorld, m: int) -> np.ndarray:
    """Dataset-level channel of the mixture learner, E marginalized out."""
    pg = world.aug_dist.probs
    orbit_avg = np.einsum("g,zgw->zw", pg, world.channel)  # E_G P(w | z, G)
    nz, nw = world.num_z, world.num_w
    shape = (nz,) * m + (nw,)
    out = np.zeros(shape)
    for S in itertools.product(range(nz), repeat=m):
        out[S] = np.mean([orbit_avg[z] for z in S], axis=0)
    return out


def per_sample_vs_dataset_mi(world: DiscreteWorld, m: int = 2) -> dict:
    if world.num_z**m * world.num_w > ENUMERATION_GUARD:
        raise EnumerationTooLargeError("dataset enumeration too large")
    return per_sample_vs_dataset_mi_from_channel(
        world.data_dist, world_dataset_channel(world, m), m
    )


# ---------------------------------------------------------------------------
# Information lemmas
# ---------------------------------------------------------------------------

def mi_from_conditional(px: np.ndarray, p_y_given_x: np.ndarray) -> float:
    return mutual_information_exact(px[:, None] * p_y_given_x)


def verify_information_lemmas(seed: int, trials: int = 1000) -> dict:
    """Check the MI = expected-KL identity and the data-processing inequality.

    Each trial draws a random joint (for the identity) and a random Markov
    chain X -> Y -> Z (for the DPI) over supports of size 2..4.
    """
    rng = np.random.default_rng(seed)
    max_identity_residual = 0.0
    dpi_violations = 0
    for _ in range(trials):
        kx, ky, kz = rng.integers(2, 5, size=3)
        joint = rng.dirichlet(np.ones(kx * ky)).reshape(kx, ky)
        i_direct = mutual_information_exact(joint)
        px = joint.sum(axis=1)
        py = joint.sum(axis=0)
        i_kl = sum(
            px[x] * kl_discrete(joint[x] / px[x], py) for x in range(kx) if px[x] > 0
        )
        max_identity_residual = max(max_identity_residual, abs(i_direct - i_kl))

        px = rng.dirichlet(np.ones(kx))
        p_yx = rng.dirichlet(np.ones(ky), size=kx)
        p_zy = rng.dirichlet(np.ones(kz), size=ky)
        i_xy = mi_from_conditional(px, p_yx)
        py = px @ p_yx
        i_yz = mi_from_conditional(py, p_zy)
        p_zx = p_yx @ p_zy
        i_xz = mi_from_conditional(px, p_zx)
        if i_xz > min(i_xy, i_yz) + 1e-12:
            dpi_violations += 1
    return {
        "trials": int(trials),
        "max_identity_residual": max_identity_residual,
        "dpi_violations": dpi_violations,
        "pass": max_identity_residual < 1e-12 and dpi_violations == 0,
    }


# ---------------------------------------------------------------------------
# Finite hypothesis/augmentation corollary
# ---------------------------------------------------------------------------

def corollary2_report(m: int, n: int, W_size: int, G_size: int, kl: float, R: float) -> dict:
    """Cardinality-based bound terms: sqrt(2 log|W|/m) and sqrt(2 log|G|/n)."""
    if min(m, n, W_size, G_size) < 1:
        raise InvalidInputError("sizes must be >= 1")
    if kl < 0 or R <= 0:
        raise InvalidInputError("need kl >= 0 and R > 0")
    term_w = math.sqrt(2.0 * math.log(W_size) / m)
    term_g = math.sqrt(2.0 * math.log(G_size) / n)
    total = R * (math.sqrt(2.0 * kl) + term_w + term_g)
    return {"term_w": term_w, "term_g": term_g, "total": total}


def check_entropy_cap(world: DiscreteWorld, m: int = 2, n: int = 2) -> dict:
    """Verify I(S;W) <= log|W| and max_z I(E;W | z) <= log|G| by enumeration."""
    nz, ng, nw = world.num_z, world.num_g, world.num_w
    if nz**m * nw > ENUMERATION_GUARD or ng**n * nw > ENUMERATION_GUARD:
        raise EnumerationTooLargeError("entropy-cap enumeration too large")
    pz = world.data_dist.probs
    pg = world.aug_dist.probs

    channel_sw = world_dataset_channel(world, m).reshape(nz**m, nw)
    p_s = pz
    for _ in range(m - 1):
        p_s = np.multiply.outer(p_s, pz)
    i_sw = mutual_information_exact(p_s.reshape(-1)[:, None] * channel_sw)

    i_ew_max = 0.0
    for z in range(nz):
        rows = []
        weights = []
        for E in itertools.product(range(ng), repeat=n):
            weights.append(float(np.prod(pg[list(E)])))
            rows.append(np.mean([world.channel[z, g] for g in E], axis=0))
        joint = np.asarray(weights)[:, None] * np.asarray(rows)
        i_ew_max = max(i_ew_max, mutual_information_exact(joint))
    return {
        "i_sw": i_sw,
        "log_w": math.log(nw),
        "i_ew_max": i_ew_max,
        "log_g": math.log(ng),
        "holds": i_sw <= math.log(nw) + 1e-12 and i_ew_max <= math.log(ng) + 1e-12,
    }
