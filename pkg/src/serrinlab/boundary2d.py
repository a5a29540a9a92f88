"""Planar lens domains inside the upper unit half disk.

A :class:`DomainBoundary` consists of the inner curve ``sigma`` (the free
part, inside the open disk) and the arc ``t_arc`` of the unit circle.  Both
are parametrized on ``[0, 1]`` and run from corner ``p1`` (``s = 0``) to
corner ``p2`` (``s = 1``).

Orientation: ``sigma`` runs counterclockwise around the domain, so its
outward normal is the tangent rotated clockwise.  ``t_arc`` runs clockwise
around the domain and its outward normal is the point itself.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import DegenerateCorner, DegenerateDomain, DimensionMismatch, LeavesDomain, SelfIntersection
from .geom_core import CapSpec, contact_angle, validate

__all__ = [
    "DomainBoundary",
    "cap_boundary",
    "perturbed_boundary",
    "contact_angle_at",
    "boundary_summary",
    "reflected_modes",
    "arc_lengths",
    "exact_area",
    "exact_moments",
]

_CHECK_SAMPLES = 4001


def _rot_cw(v):
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


class DomainBoundary:
    """Exact parametrization of a lens domain.

    The inner curve is a polar graph around the cap center ``z``::

        sigma(s) = z + rho(s) * (cos phi(s), sin phi(s)),
        phi(s) = phi1 + s * (phi2 - phi1),

    with ``rho = r`` for the cap itself.  The perturbation profile
    ``16 s^2 (1-s)^2 * mean_k sin(k pi s + phase_k)`` vanishes to second order
    at both corners and is bounded by one in absolute value.
    """

    def __init__(self, spec: CapSpec, eps: float = 0.0, modes=()):
        if spec.d != 2:
            raise DimensionMismatch("lens boundaries are planar (d = 2)")
        problems = validate(spec)
        if problems:
            raise DegenerateDomain("; ".join(problems))
        self.spec = spec
        self.eps = float(eps)
        self.modes = tuple((int(k), float(p)) for k, p in modes)
        if any(k < 1 for k, _ in self.modes):
            raise ValueError("mode numbers must be >= 1")
        self.kind = "cap" if self.eps == 0.0 or not self.modes else "perturbed"

        z = spec.z_array
        zn = spec.z_norm
        r = spec.r
        psi = math.atan2(z[1], z[0])
        beta = math.acos((1.0 + zn * zn - r * r) / (2.0 * zn))
        # p1 lies counterclockwise of the z direction on the unit circle
        self.alpha1 = psi + beta
        self.alpha2 = psi - beta
        p1 = np.array([math.cos(self.alpha1), math.sin(self.alpha1)])
        p2 = np.array([math.cos(self.alpha2), math.sin(self.alpha2)])
        self.phi1 = math.atan2(p1[1] - z[1], p1[0] - z[0])
        phi2 = math.atan2(p2[1] - z[1], p2[0] - z[0])
        self.dphi = (phi2 - self.phi1) % (2 * math.pi)
        # the arc inside the disk faces the origin
        towards = (psi + math.pi - self.phi1) % (2 * math.pi)
        if not 0.0 < towards < self.dphi:
            raise DegenerateDomain("could not orient the inner arc")
        self.phi2 = self.phi1 + self.dphi
        self.corners = (p1, p2)
        self._z = z

    # inner curve ------------------------------------------------------
    def _profile(self, s):
        """Perturbation factor b(s) and its derivative."""
        s = np.asarray(s, dtype=float)
        if self.kind == "cap":
            return np.zeros_like(s), np.zeros_like(s)
        bump = 16.0 * s**2 * (1 - s) ** 2
        dbump = 32.0 * s * (1 - s) * (1 - 2 * s)
        wave = np.zeros_like(s)
        dwave = np.zeros_like(s)
        for k, ph in self.modes:
            wave = wave + np.sin(k * math.pi * s + ph)
            dwave = dwave + k * math.pi * np.cos(k * math.pi * s + ph)
        m = len(self.modes)
        return bump * wave / m, (dbump * wave + bump * dwave) / m

    def rho(self, s):
        b, _ = self._profile(s)
        if self.kind == "cap":
            return np.full(np.shape(s), self.spec.r)
        return self.spec.r * (1.0 + self.eps * b)

    def sigma(self, s):
        s = np.asarray(s, dtype=float)
        phi = self.phi1 + s * self.dphi
        rho = self.rho(s)
        return self._z + (rho[..., None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1))

    def sigma_deriv(self, s):
        s = np.asarray(s, dtype=float)
        phi = self.phi1 + s * self.dphi
        er = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        ephi = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        _, db = self._profile(s)
        drho = self.spec.r * self.eps * db if self.kind != "cap" else np.zeros_like(s)
        return drho[..., None] * er + (self.rho(s) * self.dphi)[..., None] * ephi

    def sigma_normal(self, s):
        """Outward unit normal along the inner curve."""
        if self.kind == "cap":
            return (self.sigma(s) - self._z) / self.spec.r
        t = _rot_cw(self.sigma_deriv(s))
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    # unit-circle arc --------------------------------------------------
    def t_angle(self, s):
        return self.alpha1 + np.asarray(s, dtype=float) * (self.alpha2 - self.alpha1)

    def t_arc(self, s):
        a = self.t_angle(s)
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    def t_deriv(self, s):
        a = self.t_angle(s)
        return (self.alpha2 - self.alpha1) * np.stack([-np.sin(a), np.cos(a)], axis=-1)

    def t_normal(self, s):
        return self.t_arc(s)

    # generic access by tag ------------------------------------------------
    def curve(self, tag, s):
        return self.sigma(s) if tag == "Sigma" else self.t_arc(s)

    def curve_deriv(self, tag, s):
        return self.sigma_deriv(s) if tag == "Sigma" else self.t_deriv(s)

    def normal(self, tag, s):
        return self.sigma_normal(s) if tag == "Sigma" else self.t_normal(s)

    def __repr__(self):
        return f"DomainBoundary(kind={self.kind!r}, eps={self.eps!r}, modes={self.modes!r})"


def cap_boundary(spec: CapSpec) -> DomainBoundary:
    """Boundary of the exact cap ``B_r(z) ∩ B_+^2``."""
    return DomainBoundary(spec)


def _check_perturbed(b: DomainBoundary):
    s = np.linspace(0.0, 1.0, _CHECK_SAMPLES)[1:-1]
    rho = b.rho(s)
    if np.any(rho <= 0):
        raise SelfIntersection("perturbed radius is not positive")
    x = b.sigma(s)
    if np.any(np.linalg.norm(x, axis=1) >= 1.0):
        raise LeavesDomain("perturbed curve leaves the unit disk")
    if np.any(x[:, 1] <= 0):
        raise LeavesDomain("perturbed curve leaves the upper half plane")


def perturbed_boundary(spec: CapSpec, eps: float, modes) -> DomainBoundary:
    """Cap boundary with the inner arc pushed radially by ``eps * r * profile``.

    Corners, the unit-circle arc and the corner tangents are unchanged.
    """
    b = DomainBoundary(spec, eps, modes)
    if b.kind != "cap":
        _check_perturbed(b)
    return b


def reflected_modes(modes):
    """Modes describing the mirror image across the ``x_2`` axis of an on-axis domain."""
    return tuple((k, (1 - k) * math.pi - p) for k, p in modes)


def contact_angle_at(b: DomainBoundary, corner_index: int):
    """Contact angle at corner ``p1`` (0) or ``p2`` (1).

    Returns ``(theta, cos_normals, cos_conormals)`` where the two cosines are
    ``<N, -N_bar>`` and ``<mu, nu_bar>``.
    """
    s = float(corner_index)
    if s not in (0.0, 1.0):
        raise ValueError("corner_index must be 0 or 1")
    p = b.t_arc(s)
    N = b.sigma_normal(s)
    Nbar = p
    sign = 1.0 if corner_index == 1 else -1.0
    ts = b.sigma_deriv(s)
    tt = b.t_deriv(s)
    ts = ts / np.linalg.norm(ts)
    tt = tt / np.linalg.norm(tt)
    if abs(ts[0] * tt[1] - ts[1] * tt[0]) < 1e-12:
        raise DegenerateCorner(f"tangents at corner {corner_index} are parallel")
    mu = sign * ts
    nubar = sign * tt
    cos_n = float(np.dot(N, -Nbar))
    cos_m = float(np.dot(mu, nubar))
    return math.acos(max(-1.0, min(1.0, cos_n))), cos_n, cos_m


def _line_integral(fn, a=0.0, b=1.0):
    val, _ = integrate.quad(fn, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def arc_lengths(b: DomainBoundary):
    ls = _line_integral(lambda s: float(np.linalg.norm(b.sigma_deriv(s))))
    lt = abs(b.alpha1 - b.alpha2)
    return ls, lt


def exact_area(b: DomainBoundary) -> float:
    """Area by the divergence theorem on the exact curves (adaptive quadrature)."""

    def cross(curve, deriv):
        def fn(s):
            x = curve(s)
            dx = deriv(s)
            return float(x[0] * dx[1] - x[1] * dx[0])

        return fn

    a_sigma = _line_integral(cross(b.sigma, b.sigma_deriv))
    a_t = _line_integral(cross(b.t_arc, b.t_deriv))
    return 0.5 * (a_sigma - a_t)


def exact_moments(b: DomainBoundary):
    """``(int_Omega x2 dx, int_Sigma x2 dA, int_T x2 dA)`` by adaptive quadrature."""

    def flux(curve, deriv):
        return lambda s: float(-0.5 * curve(s)[1] ** 2 * deriv(s)[0])

    vol = _line_integral(flux(b.sigma, b.sigma_deriv)) - _line_integral(flux(b.t_arc, b.t_deriv))
    vs = _line_integral(lambda s: float(b.sigma(s)[1] * np.linalg.norm(b.sigma_deriv(s))))
    vt = _line_integral(lambda s: float(b.t_arc(s)[1] * np.linalg.norm(b.t_deriv(s))))
    return vol, vs, vt


def boundary_summary(b: DomainBoundary) -> dict:
    ls, lt = arc_lengths(b)
    angles = [contact_angle_at(b, i)[0] for i in (0, 1)]
    return {
        "kind": b.kind,
        "eps": b.eps,
        "modes": [list(m) for m in b.modes],
        "corners": [list(map(float, p)) for p in b.corners],
        "theta_deg": [math.degrees(a) for a in angles],
        "theta_cap_deg": math.degrees(contact_angle(b.spec)),
        "length_sigma": ls,
        "length_T": lt,
        "area": exact_area(b),
    }
