"""Exact geometry of capillary caps ``B_r(z) ∩ B_+^d`` in the upper unit half ball.

A cap is fixed by the dimension ``d`` and two constants: the Neumann value
``c0`` of the quadratic solution on the spherical part and the Robin constant
``c`` on the part lying on the unit sphere.  Radius and center distance follow

    r = d * c0,    |z|^2 = 1 + d^2 c0^2 - 2 d c,

and the contact angle with the unit sphere satisfies ``cos(theta) = -c / c0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDomain, DimensionMismatch, InvalidAngle, NonPositiveC0

__all__ = [
    "CapSpec",
    "cap_from_constants",
    "constants_from_cap",
    "contact_angle",
    "validate",
    "spec_to_json",
    "spec_from_json",
]


@dataclass(frozen=True)
class CapSpec:
    """Capillary cap domain ``B_r(z) ∩ B_+^d`` together with its constants."""

    d: int
    z: tuple[float, ...]
    r: float
    c0: float
    c: float
    tilt: float = 0.0

    @property
    def z_array(self) -> np.ndarray:
        return np.asarray(self.z, dtype=float)

    @property
    def z_norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.z))

    @property
    def theta(self) -> float:
        return contact_angle(self)

    @classmethod
    def from_center(cls, z, r: float) -> "CapSpec":
        """Build a spec from an arbitrary center and radius.

        The constants are derived from the geometry, so the result always
        satisfies the two defining relations; the remaining invariants may
        fail and are reported by :func:`validate`.
        """
        z = tuple(float(v) for v in z)
        d = len(z)
        z2 = math.fsum(v * v for v in z)
        return cls(d=d, z=z, r=float(r), c0=float(r) / d, c=(1.0 + r * r - z2) / (2 * d))


def _center_norm(d: int, c0: float, c: float) -> float:
    disc = 1.0 + d * d * c0 * c0 - 2.0 * d * c
    if disc <= 0.0:
        raise DegenerateDomain(f"|z|^2 = {disc!r} is not positive")
    return math.sqrt(disc)


def cap_from_constants(d: int, c0: float, c: float, tilt: float = 0.0) -> CapSpec:
    """Return the cap determined by ``(d, c0, c)``.

    The center is placed on the ``+e_d`` axis, then rotated by ``tilt``
    radians in the ``(e_1, e_d)`` plane.

    Raises
    ------
    NonPositiveC0
        If ``c0 <= 0``.
    InvalidAngle
        If ``|c| >= c0``.
    DegenerateDomain
        If the cap does not meet the unit sphere transversally or its
        closure touches the plane ``{x_d = 0}``.
    """
    d = int(d)
    if d < 2:
        raise DimensionMismatch(f"dimension must be >= 2, got {d}")
    if not all(math.isfinite(v) for v in (c0, c, tilt)):
        raise DegenerateDomain("constants must be finite")
    if c0 <= 0.0:
        raise NonPositiveC0(f"c0 must be positive, got {c0!r}")
    if abs(c) >= c0:
        raise InvalidAngle(f"|c| must be < c0 (got c={c!r}, c0={c0!r})")
    zn = _center_norm(d, c0, c)
    z = [0.0] * d
    z[0] = zn * math.sin(tilt) if tilt else 0.0
    z[-1] = zn * math.cos(tilt) if tilt else zn
    spec = CapSpec(d=d, z=tuple(z), r=d * c0, c0=float(c0), c=float(c), tilt=float(tilt))
    problems = validate(spec)
    if problems:
        raise DegenerateDomain("; ".join(problems))
    return spec


def constants_from_cap(spec: CapSpec) -> tuple[float, float]:
    """Recover ``(c0, c)`` from the geometry ``(z, r)`` of a cap."""
    z2 = math.fsum(v * v for v in spec.z)
    return spec.r / spec.d, (1.0 + spec.r * spec.r - z2) / (2 * spec.d)


def contact_angle(spec: CapSpec) -> float:
    """Contact angle ``theta = arccos(-c/c0)`` between the cap and the unit sphere.

    The value is cross-checked against the triangle (cosine theorem) form
    ``-(1 + r^2 - |z|^2) / (2r)``.
    """
    cos_a = -spec.c / spec.c0
    z2 = math.fsum(v * v for v in spec.z)
    cos_b = -(1.0 + spec.r * spec.r - z2) / (2.0 * spec.r)
    if abs(cos_a - cos_b) > 1e-12:
        raise DegenerateDomain(f"inconsistent cap: cos(theta) {cos_a!r} vs {cos_b!r}")
    if not -1.0 < cos_a < 1.0:
        raise InvalidAngle(f"cos(theta) = {cos_a!r} outside (-1, 1)")
    return math.acos(cos_a)


def validate(spec: CapSpec) -> list[str]:
    """List the violated invariants of ``spec``; empty when valid."""
    out = []
    if spec.d < 2:
        out.append(f"d < 2: got {spec.d}")
    if len(spec.z) != spec.d:
        out.append(f"center has {len(spec.z)} coordinates, expected {spec.d}")
        return out
    vals = list(spec.z) + [spec.r, spec.c0, spec.c]
    if not all(math.isfinite(v) for v in vals):
        out.append("non-finite entries")
        return out
    if spec.r <= 0:
        out.append(f"r <= 0: got {spec.r!r}")
    if spec.c0 <= 0:
        out.append(f"c0 <= 0: got {spec.c0!r}")
    if abs(spec.r - spec.d * spec.c0) > 1e-12 * max(1.0, spec.r):
        out.append("r != d*c0")
    z2 = math.fsum(v * v for v in spec.z)
    rel = 1.0 + spec.d**2 * spec.c0**2 - 2 * spec.d * spec.c
    if abs(z2 - rel) > 1e-12 * max(1.0, z2):
        out.append("|z|^2 != 1 + d^2 c0^2 - 2 d c")
    if abs(spec.c) >= spec.c0:
        out.append("|c| >= c0: contact angle outside (0, pi)")
    zn = math.sqrt(z2)
    if zn <= abs(spec.r - 1.0):
        out.append("|z| <= |r - 1|: one sphere contains the other, Gamma empty")
    if zn >= spec.r + 1.0:
        out.append("|z| >= r + 1: Gamma empty")
    if spec.z[-1] <= spec.r:
        out.append("z_d <= r: domain closure touches the plane {x_d = 0}")
    return out


def spec_to_json(spec: CapSpec) -> dict:
    """Canonical JSON form, including derived quantities."""
    return {
        "d": spec.d,
        "c0": spec.c0,
        "c": spec.c,
        "tilt": spec.tilt,
        "r": spec.r,
        "z": list(spec.z),
        "z_norm": spec.z_norm,
        "theta_deg": math.degrees(contact_angle(spec)),
    }


def spec_from_json(obj) -> CapSpec:
    """Inverse of :func:`spec_to_json`; derived fields are ignored."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    return cap_from_constants(int(obj["d"]), float(obj["c0"]), float(obj["c"]), float(obj.get("tilt", 0.0)))
