"""Neural and plug-in estimators for KL divergence and mutual information.

The mutual-information estimator trains a statistics network to maximize the
Donsker-Varadhan objective mean_P[T] - log mean_Q[exp T], with marginal
samples produced by within-batch shuffling of the second coordinate and an
exponential-moving-average correction of the denominator gradient. The KL
estimator trains a binary discriminator (class 0 = P, class 1 = Q) and
averages the log density ratio log((1 - D) / D) over held-out P samples.
Both are deterministic given (data, config, seed).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import nn
from .core import LossSpec
from .errors import InvalidInputError, TrainingDivergedError

EXP_CLAMP = 30.0  # cap on statistics before exponentiation during training


@dataclass(frozen=True)
class MineConfig:
    hidden_units: int = 128
    hidden_layers: int = 2
    learning_rate: float = 1e-3
    steps: int = 300
    batch_size: int = 512
    ema_decay: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidInputError("steps must be >= 1")
        if not (0.0 < self.ema_decay < 1.0):
            raise InvalidInputError("ema_decay must lie in (0, 1)")


@dataclass(frozen=True)
class DiscriminatorConfig:
    hidden_units: int = 64
    hidden_layers: int = 2
    learning_rate: float = 1e-3
    epochs: int = 15
    batch_size: int = 128
    seed: int = 0
    calibration: str = "logit-symmetric"

    def __post_init__(self):
        if self.calibration not in ("none", "logit-symmetric"):
            raise InvalidInputError("calibration must be 'none' or 'logit-symmetric'")


def config_hash(config) -> str:
    payload = json.dumps(asdict(config), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def result_document(estimate_nats: float, seed: int, config, diagnostics: dict | None = None) -> dict:
    """Canonical JSON form of one estimator output."""
    return {
        "estimate_nats": float(estimate_nats),
        "seed": int(seed),
        "config_hash": config_hash(config),
        "diagnostics": diagnostics or {},
    }


def _as_sample_table(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a nonempty (N, d) table")
    return arr


def _log_mean_exp(values: np.ndarray) -> float:
    shift = float(np.max(values))
    return shift + math.log(float(np.mean(np.exp(values - shift))))


def _standardize(x: np.ndarray):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return (x - mean) / std


def mine_estimate(joint_x, joint_y, config: MineConfig, seed: int | None = None) -> dict:
    """Donsker-Varadhan lower-bound estimate of I(X;Y) in nats.

    joint_x/joint_y are paired samples from the joint distribution; the
    product-of-marginals samples are made by shuffling y within each batch.
    Returns {"mi_hat", "trace"}; mi_hat is the final objective evaluated on
    the full sample with a fixed derived permutation.
    """
    x = _as_sample_table(joint_x, "joint_x")
    y = _as_sample_table(joint_y, "joint_y")
    if x.shape[0] != y.shape[0]:
        raise InvalidInputError("joint tables must have equal row counts")
    n = x.shape[0]
    if n < 1000:
        raise InvalidInputError("need >= 1e3 paired samples")
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(int(seed))

    x = _standardize(x)
    y = _standardize(y)
    sizes = [x.shape[1] + y.shape[1]] + [config.hidden_units] * config.hidden_layers + [1]
    net = nn.init_network(sizes, seed=int(rng.integers(2**31)))
    opt = nn.AdamState.for_network(net)
    train_cfg = nn.TrainConfig(learning_rate=config.learning_rate, seed=int(seed))

    batch = min(config.batch_size, n)
    ema = None
    trace = []
    for _ in range(config.steps):
        idx = rng.choice(n, size=batch, replace=False)
        perm = rng.permutation(batch)
        joint_in = np.hstack([x[idx], y[idx]])
        marg_in = np.hstack([x[idx], y[idx][perm]])

        out_j, acts_j = nn.forward_cached(net, joint_in)
        out_m, acts_m = nn.forward_cached(net, marg_in)
        t_j = out_j[:, 0]
        t_m = np.minimum(out_m[:, 0], EXP_CLAMP)
        exp_m = np.exp(t_m)
        denom = float(exp_m.mean())
        ema = denom if ema is None else config.ema_decay * ema + (1 - config.ema_decay) * denom
        dv = float(t_j.mean()) - math.log(max(denom, 1e-300))
        trace.append(dv)
        if not math.isfinite(dv):
            raise TrainingDivergedError("DV objective became non-finite", trace=trace)

        # maximize: d(objective)/dT_joint = 1/B; bias-corrected denominator
        # gradient uses the moving average instead of the batch mean (zero
        # where the stabilizing clamp is active)
        grad_j = np.full((batch, 1), -1.0 / batch)
        grad_m = np.where(
            out_m[:, 0] < EXP_CLAMP, exp_m / (batch * max(ema, 1e-300)), 0.0
        )[:, None]
        gw_j, gb_j = nn.backward_from_output_grad(net, acts_j, grad_j)
        gw_m, gb_m = nn.backward_from_output_grad(net, acts_m, grad_m)
        grads_w = [a + b for a, b in zip(gw_j, gw_m)]
        grads_b = [a + b for a, b in zip(gb_j, gb_m)]
        nn.adam_step(net, opt, grads_w, grads_b, train_cfg)

    final_perm = np.random.default_rng(int(seed) + 1).permutation(n)
    t_joint = nn.forward(net, np.hstack([x, y]))[:, 0]
    t_marg = nn.forward(net, np.hstack([x, y[final_perm]]))[:, 0]
    mi_hat = float(t_joint.mean()) - _log_mean_exp(t_marg)
    if not math.isfinite(mi_hat):
        raise TrainingDivergedError("final DV estimate non-finite", trace=trace)
    return {"mi_hat": mi_hat, "trace": trace}


def density_ratio_kl(samples_p, samples_q, config: DiscriminatorConfig, seed: int | None = None) -> dict:
    """Discriminator-based estimate of KL(P || Q) in nats.

    Trains binary classifiers (class 0 = P, class 1 = Q) with cross-entropy
    in two cross-fitted folds and averages log((1 - D) / D) over the held-out
    P samples of each fold, so every P sample is scored by a discriminator
    that never saw it. Also reports the held-out AUC as a separability
    diagnostic; AUC > 0.999 marks the estimate unreliable (the classes are
    essentially disjoint and the KL is effectively unbounded).
    """
    p = _as_sample_table(samples_p, "samples_p")
    q = _as_sample_table(samples_q, "samples_q")
    if p.shape[1] != q.shape[1]:
        raise InvalidInputError("sample tables must share the feature dimension")
    if p.shape[0] != q.shape[0]:
        raise InvalidInputError("equal sample counts from both classes required")
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(int(seed))

    # standardize with pooled statistics so both classes see one transform
    pooled = np.vstack([p, q])
    mean, std = pooled.mean(axis=0), pooled.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    p = (p - mean) / std
    q = (q - mean) / std

    half_p = p.shape[0] // 2
    half_q = q.shape[0] // 2
    p = p[rng.permutation(p.shape[0])]
    q = q[rng.permutation(q.shape[0])]
    folds = (
        ((p[:half_p], q[:half_q]), (p[half_p:], q[half_q:])),
        ((p[half_p:], q[half_q:]), (p[:half_p], q[:half_q])),
    )

    kl_parts, auc_parts = [], []
    ce = LossSpec(kind="clipped-cross-entropy", clip_M=EXP_CLAMP)
    sizes = [p.shape[1]] + [config.hidden_units] * config.hidden_layers + [2]
    for (p_train, q_train), (p_held, q_held) in folds:
        inputs = np.vstack([p_train, q_train])
        labels = np.concatenate(
            [np.zeros(len(p_train), dtype=int), np.ones(len(q_train), dtype=int)]
        )
        net = nn.init_network(sizes, seed=int(rng.integers(2**31)), output_head="softmax")
        train_cfg = nn.TrainConfig(
            learning_rate=config.learning_rate,
            batch_size=config.batch_size,
            epochs=config.epochs,
            seed=int(rng.integers(2**31)),
        )
        net, _ = nn.train(net, inputs, labels, train_cfg, ce)

        logits_p = nn.forward_cached(net, p_held)[1][-1]
        logits_q = nn.forward_cached(net, q_held)[1][-1]
        if config.calibration == "logit-symmetric":
            # log((1-D)/D) expressed directly as a logit difference; exactly
            # antisymmetric under a class swap and immune to probability clamping
            log_ratio_p = logits_p[:, 0] - logits_p[:, 1]
        else:
            d_prob = np.clip(nn.softmax(logits_p)[:, 1], 1e-12, 1 - 1e-12)
            log_ratio_p = np.log((1.0 - d_prob) / d_prob)
        kl_parts.append(float(log_ratio_p.mean()))
        auc_parts.append(
            _rank_auc(logits_p[:, 1] - logits_p[:, 0], logits_q[:, 1] - logits_q[:, 0])
        )

    kl_hat = float(np.mean(kl_parts))
    auc = float(np.mean(auc_parts))
    return {"kl_hat": kl_hat, "auc": auc, "unreliable": auc > 0.999}


def _rank_auc(score_neg: np.ndarray, score_pos: np.ndarray) -> float:
    """P(score_pos > score_neg) with tie correction (Mann-Whitney)."""
    combined = np.concatenate([score_neg, score_pos])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty_like(combined)
    ranks[order] = np.arange(1, combined.size + 1)
    # average ranks over ties
    sorted_vals = combined[order]
    start = 0
    for end in range(1, combined.size + 1):
        if end == combined.size or sorted_vals[end] != sorted_vals[start]:
            ranks[order[start:end]] = 0.5 * (start + 1 + end)
            start = end
    n_neg, n_pos = score_neg.size, score_pos.size
    rank_sum_pos = float(ranks[n_neg:].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_neg * n_pos)


def plug_in_mi_discrete(count_matrix) -> dict:
    """Empirical-joint MI of a contingency table plus its Miller-Madow term.

    The correction (K_x + K_y - K_xy - 1) / (2N), with K the nonzero cell
    counts, is reported separately; adding it to mi_hat gives the
    bias-corrected estimate.
    """
    counts = np.asarray(count_matrix, dtype=float)
    if counts.ndim != 2 or np.any(counts < 0):
        raise InvalidInputError("count_matrix must be a nonnegative matrix")
    total = float(counts.sum())
    if total < 1:
        raise InvalidInputError("need at least one count")
    joint = counts / total
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    mask = joint > 0
    mi_hat = float(np.sum(joint[mask] * np.log(joint[mask] / np.outer(px, py)[mask])))
    k_x = int(np.count_nonzero(px))
    k_y = int(np.count_nonzero(py))
    k_xy = int(np.count_nonzero(joint))
    correction = (k_x + k_y - k_xy - 1) / (2.0 * total)
    return {"mi_hat": mi_hat, "miller_madow_correction": correction}


# ---------------------------------------------------------------------------
# Fixed random projections (the training-free stand-in for a shared encoder)
# ---------------------------------------------------------------------------

PARAM_PROJECTION_DIM = 32
IMAGE_PROJECTION_DIM = 64


def random_projection(dim_in: int, dim_out: int, seed: int) -> np.ndarray:
    """Seeded Gaussian projection matrix with 1/sqrt(dim_out) scaling."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((dim_in, dim_out)) / math.sqrt(dim_out)
