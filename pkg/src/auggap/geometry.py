"""Group actions on vectors and images, and the geometry they induce.

The affine augmentation policy rotates by up to strength*10 degrees and
translates by up to a strength fraction of the image width/height. The group
diameter is the worst-case (over points) average displacement under a random
transform, estimated by inner Monte Carlo per point and a max over the
supplied point set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InvalidInputError


@dataclass(frozen=True)
class AugmentationPolicy:
    strength: float
    n_augment: int = 10
    interpolation: str = "bilinear"
    padding: str = "zero-fill"

    def __post_init__(self):
        if not (0.0 <= self.strength <= 1.0):
            raise InvalidInputError("strength must lie in [0, 1]")
        if self.n_augment < 1:
            raise InvalidInputError("n_augment must be >= 1")
        if self.interpolation != "bilinear" or self.padding != "zero-fill":
            raise InvalidInputError("only bilinear interpolation with zero-fill is supported")

    @property
    def max_rotation_deg(self) -> float:
        return self.strength * 10.0

    @property
    def max_translate_frac(self) -> float:
        return self.strength


@dataclass(frozen=True)
class TransformParams:
    angle_rad: float
    shift_x: float  # pixels
    shift_y: float  # pixels

    @property
    def is_identity(self) -> bool:
        return self.angle_rad == 0.0 and self.shift_x == 0.0 and self.shift_y == 0.0


def sample_transform(
    policy: AugmentationPolicy,
    rng: np.random.Generator,
    height: int = 28,
    width: int = 28,
) -> TransformParams:
    """Draw rotation/translation parameters uniformly within the policy ranges."""
    if policy.strength == 0.0:
        # still consume the same number of draws so downstream streams align
        rng.uniform(size=3)
        return TransformParams(0.0, 0.0, 0.0)
    max_angle = math.radians(policy.max_rotation_deg)
    angle = rng.uniform(-max_angle, max_angle)
    sx = rng.uniform(-policy.max_translate_frac, policy.max_translate_frac) * width
    sy = rng.uniform(-policy.max_translate_frac, policy.max_translate_frac) * height
    return TransformParams(float(angle), float(sx), float(sy))


_MESH_CACHE: dict = {}


def _centered_mesh(h: int, w: int):
    key = (h, w)
    if key not in _MESH_CACHE:
        rows, cols = np.meshgrid(
            np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij"
        )
        _MESH_CACHE[key] = (rows - (h - 1) / 2.0, cols - (w - 1) / 2.0)
    return _MESH_CACHE[key]


def _bilinear_gather(image: np.ndarray, src_y: np.ndarray, src_x: np.ndarray) -> np.ndarray:
    h, w = image.shape
    x0 = np.floor(src_x).astype(int)
    y0 = np.floor(src_y).astype(int)
    fx = src_x - x0
    fy = src_y - y0
    out = np.zeros(src_x.shape)
    for dy in (0, 1):
        for dx in (0, 1):
            yy = y0 + dy
            xx = x0 + dx
            weight = (fy if dy else 1.0 - fy) * (fx if dx else 1.0 - fx)
            inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
            vals = image[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
            out += weight * np.where(inside, vals, 0.0)
    return out


def apply_affine(image: np.ndarray, params: TransformParams) -> np.ndarray:
    """Rotate about the image center then translate, by inverse mapping.

    Bilinear interpolation, zero fill outside the source bounds. The center
    is ((H-1)/2, (W-1)/2). Identity parameters reproduce the input exactly.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise InvalidInputError("image must be a nonempty H x W grid")
    if not np.all(np.isfinite(image)):
        raise InvalidInputError("image contains non-finite pixels")
    if params.is_identity:
        return image.copy()

    h, w = image.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yc, xc = _centered_mesh(h, w)
    # invert: undo translation, then rotate by -angle about the center
    yt = yc - params.shift_y
    xt = xc - params.shift_x
    cos_a, sin_a = math.cos(params.angle_rad), math.sin(params.angle_rad)
    src_x = cos_a * xt + sin_a * yt + cx
    src_y = -sin_a * xt + cos_a * yt + cy
    return _bilinear_gather(image, src_y, src_x)


def apply_affine_stack(image: np.ndarray, params_list) -> np.ndarray:
    """All transforms of one image in a single vectorized pass.

    Returns a (len(params_list), H, W) stack; each slice equals
    apply_affine(image, params) for the corresponding parameters.
    """
    image = np.asarray(image, dtype=float)
    if not np.all(np.isfinite(image)):
        raise InvalidInputError("image contains non-finite pixels")
    h, w = image.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yc, xc = _centered_mesh(h, w)
    n = len(params_list)
    angles = np.array([p.angle_rad for p in params_list])
    sx = np.array([p.shift_x for p in params_list]).reshape(n, 1, 1)
    sy = np.array([p.shift_y for p in params_list]).reshape(n, 1, 1)
    cos_a = np.cos(angles).reshape(n, 1, 1)
    sin_a = np.sin(angles).reshape(n, 1, 1)
    yt = yc[None, :, :] - sy
    xt = xc[None, :, :] - sx
    src_x = cos_a * xt + sin_a * yt + cx
    src_y = -sin_a * xt + cos_a * yt + cy
    out = _bilinear_gather(image, src_y, src_x)
    # keep the identity fast path bit-exact, as in apply_affine
    for k, p in enumerate(params_list):
        if p.is_identity:
            out[k] = image
    return out


def policy_image_action(policy: AugmentationPolicy):
    """Action callable (image, rng) -> transformed image for diameter estimation."""

    def act(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        h, w = image.shape
        return apply_affine(image, sample_transform(policy, rng, height=h, width=w))

    return act


@dataclass
class DiameterEstimate:
    delta_hat: float
    argmax_point_id: int
    num_inner_mc: int
    num_points: int
    metric_name: str
    strength: float | None = None
    per_point: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "delta_hat": self.delta_hat,
            "strength": self.strength,
            "metric": self.metric_name,
            "num_points": self.num_points,
            "inner_mc": self.num_inner_mc,
            "argmax_point_id": self.argmax_point_id,
        }


def group_diameter(
    action,
    points,
    inner_mc: int,
    rng: np.random.Generator,
    metric: str = "euclidean-L2",
    strength: float | None = None,
) -> DiameterEstimate:
    """Estimate sup_z E[d(z, G z)]: per-point inner Monte Carlo, max over points.

    ``action`` is either an AugmentationPolicy (acting on image grids) or a
    callable (point, rng) -> transformed point; a callable with a truthy
    ``batched`` attribute is called once per point as (point, rng, count) and
    must return a (count, ...) stack. The metric is Euclidean L2 on flattened
    arrays.
    """
    if metric != "euclidean-L2":
        raise InvalidInputError("only the euclidean-L2 metric is supported")
    points = list(points)
    if not points:
        raise InvalidInputError("need at least one point")
    if inner_mc < 1:
        raise InvalidInputError("inner_mc must be >= 1")
    if isinstance(action, AugmentationPolicy):
        if action.strength == 0.0:
            # Dirac at the identity: zero displacement, exactly
            return DiameterEstimate(0.0, 0, inner_mc, len(points), metric, action.strength,
                                    per_point=[0.0] * len(points))
        strength = action.strength
        action = policy_image_action(action)

    base = rng.integers(0, 2**63 - 1)
    best, best_id, per_point = -1.0, 0, []
    batched = getattr(action, "batched", False)
    for k, z in enumerate(points):
        z = np.asarray(z, dtype=float)
        sub = np.random.default_rng((int(base), k))
        if batched:
            moved = np.asarray(action(z, sub, inner_mc), dtype=float)
            diffs = moved.reshape(inner_mc, -1) - z.ravel()[None, :]
            mean_disp = float(np.linalg.norm(diffs, axis=1).mean())
        else:
            acc = 0.0
            for _ in range(inner_mc):
                moved = np.asarray(action(z, sub), dtype=float)
                acc += float(np.linalg.norm((moved - z).ravel()))
            mean_disp = acc / inner_mc
        per_point.append(mean_disp)
        if mean_disp > best:
            best, best_id = mean_disp, k
    return DiameterEstimate(best, best_id, inner_mc, len(points), metric, strength, per_point)


# ---------------------------------------------------------------------------
# Circle density family: p(phi) = (1 + a sin phi) / (2 pi)
# ---------------------------------------------------------------------------

def circle_arc_distance(phi1: float, phi2: float) -> float:
    d = abs(phi1 - phi2) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def prop1_circle_check(amplitude: float, grid_size: int = 1024) -> dict:
    """KL of the tilted circle density against its diameter-based bound.

    Under full-circle uniform rotation the smoothed density is the constant
    c = 1/(2 pi), the density's arc-length Lipschitz constant is a/(2 pi),
    and the mean arc displacement is pi/2, so the bound is
    L_p * Delta / c = a pi / 2. The KL itself is integrated on the periodic
    grid (composite Simpson).
    """
    if not (0.0 <= amplitude < 1.0):
        raise InvalidInputError("amplitude must lie in [0, 1)")
    if grid_size < 256:
        raise InvalidInputError("grid_size must be >= 256")
    phi = np.linspace(0.0, 2 * math.pi, grid_size + 1)
    p = (1.0 + amplitude * np.sin(phi)) / (2 * math.pi)
    c = 1.0 / (2 * math.pi)
    kl = float(integrate.simpson(p * np.log(p / c), x=phi)) if amplitude > 0 else 0.0

    # max |dp/dphi| measured on the grid (central differences, periodic)
    interior = (np.roll(p, -1) - np.roll(p, 1))[:-1] / (2 * (phi[1] - phi[0]))
    lipschitz = float(np.max(np.abs(interior)))

    # mean arc displacement of a uniform full-circle rotation
    theta = np.linspace(-math.pi, math.pi, grid_size + 1)
    delta = float(integrate.simpson(np.abs(theta), x=theta)) / (2 * math.pi)

    bound = lipschitz * delta / c
    return {
        "kl": kl,
        "lipschitz_Lp": lipschitz,
        "lower_c": c,
        "delta": delta,
        "bound": bound,
        "holds": kl <= bound + 1e-12,
    }
