"""Closed-form quadratics: the cap solution, the auxiliary function and the P-function.

Both the solution ``f`` and the auxiliary ``g_hat`` are of the form
``(|x - center|^2 - radius^2) / (2d)``; they differ in how the center is
constrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MistaggedSample, NegativeDiscriminant, NonUnitDirection
from .geom_core import CapSpec

__all__ = [
    "QuadraticSolution",
    "AuxQuadratic",
    "solution_for",
    "eval_solution",
    "eval_quadratic",
    "eval_P",
    "laplacian_P",
    "sample_tagged",
    "bvp_residuals",
    "make_aux",
    "default_aux",
    "min_R_hat",
    "aux_robin_defect",
]

TAG_TOL = 1e-10


@dataclass(frozen=True)
class QuadraticSolution:
    """``f(x) = (|x - z|^2 - r^2) / (2d)``."""

    d: int
    z: tuple[float, ...]
    r: float

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.z, dtype=float)

    @property
    def radius(self) -> float:
        return self.r


@dataclass(frozen=True)
class AuxQuadratic:
    """``g_hat(x) = (|x - O_hat|^2 - R_hat^2) / (2d)`` with ``|O_hat|^2 = 1 + R_hat^2 - 2dc``."""

    d: int
    O_hat: tuple[float, ...]
    R_hat: float
    c: float

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.O_hat, dtype=float)

    @property
    def radius(self) -> float:
        return self.R_hat


def solution_for(spec: CapSpec) -> QuadraticSolution:
    return QuadraticSolution(d=spec.d, z=spec.z, r=spec.r)


def _points(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise DimensionMismatch(f"point dimension {x.shape[-1]} != {d}")
    return x


def eval_quadratic(q, x):
    """Value, gradient and Hessian of a quadratic of either kind.

    ``x`` may be a single point of shape ``(d,)`` or a batch ``(N, d)``.
    """
    x = _points(x, q.d)
    diff = x - q.center
    value = (np.sum(diff * diff, axis=-1) - q.radius**2) / (2 * q.d)
    grad = diff / q.d
    hess = np.broadcast_to(np.eye(q.d) / q.d, x.shape[:-1] + (q.d, q.d)).copy()
    return value, grad, hess


def eval_solution(sol: QuadraticSolution, x):
    """Return ``(value, gradient, hessian)`` of the cap solution at ``x``."""
    return eval_quadratic(sol, x)


def eval_P(sol, x):
    """P-function ``|grad f|^2 / 2 - f / d``.

    For a quadratic solution this is the constant ``r^2 / (2 d^2) = c0^2 / 2``.
    """
    value, grad, _ = eval_quadratic(sol, x)
    return 0.5 * np.sum(grad * grad, axis=-1) - value / sol.d


def laplacian_P(hess):
    """``|H|^2 - (tr H)^2 / d``, the Laplacian of P for a solution of ``Δf = 1``.

    Nonnegative by Cauchy-Schwarz, zero iff ``H`` is a multiple of the identity.
    """
    hess = np.asarray(hess, dtype=float)
    d = hess.shape[-1]
    tr = np.trace(hess, axis1=-2, axis2=-1)
    return np.sum(hess * hess, axis=(-2, -1)) - tr * tr / d


def _random_directions(rng, n, d):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _cone_directions(rng, n, axis, half_angle):
    """Unit vectors at angle strictly below ``half_angle`` from ``axis``."""
    d = axis.size
    v = rng.standard_normal((n, d))
    v -= np.outer(v @ axis, axis)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    ang = half_angle * rng.uniform(0.0, 0.98, size=n)
    return np.cos(ang)[:, None] * axis + np.sin(ang)[:, None] * v


def sample_tagged(spec: CapSpec, n: int, rng=None) -> dict[str, np.ndarray]:
    """Draw ``n`` points of each tag (``interior``, ``sigma``, ``T``) on a cap."""
    rng = np.random.default_rng(rng)
    z = spec.z_array
    zn = spec.z_norm
    zhat = z / zn
    r = spec.r
    # angular radius of T seen from the origin, and of Sigma seen from z
    beta_t = math.acos(np.clip((1 + zn * zn - r * r) / (2 * zn), -1, 1))
    beta_s = math.acos(np.clip((zn * zn + r * r - 1) / (2 * r * zn), -1, 1))
    t_pts = _cone_directions(rng, n, zhat, beta_t)
    s_pts = z + r * _cone_directions(rng, n, -zhat, beta_s)
    # Omega is convex, so chords between the two boundary parts stay inside
    w = rng.uniform(0.05, 0.95, size=(n, 1))
    i_pts = (1 - w) * s_pts + w * t_pts[rng.permutation(n)]
    return {"interior": i_pts, "sigma": s_pts, "T": t_pts}


def _check_tags(spec: CapSpec, samples):
    z = spec.z_array
    for tag, pts in samples.items():
        pts = _points(pts, spec.d)
        if pts.size == 0:
            continue
        dz = np.linalg.norm(pts - z, axis=-1)
        do = np.linalg.norm(pts, axis=-1)
        up = pts[..., -1] > 0
        if tag == "interior":
            ok = (dz < spec.r) & (do < 1) & up
        elif tag == "sigma":
            ok = (np.abs(dz - spec.r) <= TAG_TOL) & (do < 1) & up
        elif tag == "T":
            ok = (np.abs(do - 1) <= TAG_TOL) & (dz < spec.r) & up
        else:
            raise MistaggedSample(f"unknown tag {tag!r}")
        if not np.all(ok):
            bad = int(np.argmin(ok))
            raise MistaggedSample(f"sample {bad} tagged {tag!r} fails its defining relation")


def bvp_residuals(sol: QuadraticSolution, spec: CapSpec, samples) -> dict[str, float]:
    """Max residuals of the mixed problem plus the overdetermined Neumann condition.

    ``samples`` maps each tag to an array of points.  Points are checked
    against their tag before evaluation.
    """
    _check_tags(spec, samples)
    out = {"pde_max": 0.0, "dirichlet_max": 0.0, "robin_max": 0.0, "neumann_max": 0.0}
    z = spec.z_array
    if len(samples.get("interior", ())):
        _, _, h = eval_quadratic(sol, samples["interior"])
        out["pde_max"] = float(np.max(np.abs(np.trace(h, axis1=-2, axis2=-1) - 1.0)))
    if len(samples.get("sigma", ())):
        x = np.asarray(samples["sigma"], dtype=float)
        v, g, _ = eval_quadratic(sol, x)
        nu = (x - z) / spec.r
        out["dirichlet_max"] = float(np.max(np.abs(v)))
        out["neumann_max"] = float(np.max(np.abs(np.sum(g * nu, axis=-1) - spec.c0)))
    if len(samples.get("T", ())):
        x = np.asarray(samples["T"], dtype=float)
        v, g, _ = eval_quadratic(sol, x)
        out["robin_max"] = float(np.max(np.abs(np.sum(g * x, axis=-1) - v - spec.c)))
    return out


def make_aux(d: int, c: float, R_hat: float, u) -> AuxQuadratic:
    """Auxiliary quadratic with center ``sqrt(1 + R_hat^2 - 2dc) * u``.

    Any such function has unit Laplacian and satisfies ``g_nu - g = c`` on
    the unit sphere, for every choice of ``R_hat`` and unit ``u``.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (d,):
        raise DimensionMismatch(f"direction has shape {u.shape}, expected ({d},)")
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise NonUnitDirection(f"|u| = {np.linalg.norm(u)!r}")
    disc = 1.0 + R_hat * R_hat - 2.0 * d * c
    if disc < 0:
        raise NegativeDiscriminant(f"1 + R_hat^2 - 2dc = {disc!r} < 0")
    O_hat = math.sqrt(disc) * u
    return AuxQuadratic(d=d, O_hat=tuple(float(v) for v in O_hat), R_hat=float(R_hat), c=float(c))


def default_aux(spec: CapSpec, R_hat: float | None = None) -> AuxQuadratic:
    """Default gauge: ``R_hat = 0`` along ``z / |z|``.

    When ``1 - 2dc < 0`` the smallest admissible ``R_hat`` is used instead.
    """
    if R_hat is None:
        R_hat = min_R_hat(spec.d, spec.c)
    return make_aux(spec.d, spec.c, R_hat, spec.z_array / spec.z_norm)


def min_R_hat(d: int, c: float) -> float:
    return math.sqrt(max(0.0, 2.0 * d * c - 1.0))


def aux_robin_defect(aux: AuxQuadratic, n: int = 100, rng=None) -> float:
    """Max of ``|<grad g, x> - g - c|`` over random points of the unit sphere."""
    rng = np.random.default_rng(rng)
    x = _random_directions(rng, n, aux.d)
    v, g, _ = eval_quadratic(aux, x)
    return float(np.max(np.abs(np.sum(g * x, axis=-1) - v - aux.c)))
