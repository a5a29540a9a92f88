import math

import numpy as np
import pytest

from serrinlab.boundary2d import (
    arc_lengths,
    boundary_summary,
    cap_boundary,
    contact_angle_at,
    exact_area,
    perturbed_boundary,
    reflected_modes,
)
from serrinlab.errors import LeavesDomain
from serrinlab.geom_core import cap_from_constants, contact_angle

from conftest import random_specs

S = np.linspace(0, 1, 501)


def test_cap_corners(cap, spec):
    x2 = 2.6 / 2.8
    p1, p2 = cap.corners
    assert p1 == pytest.approx([-math.sqrt(1 - x2 * x2), x2], abs=1e-15)
    assert p2 == pytest.approx([math.sqrt(1 - x2 * x2), x2], abs=1e-15)
    assert p2[0] == pytest.approx(0.371154, abs=1e-6)
    z = spec.z_array
    for p in (p1, p2):
        root = p + 0.01
        for _ in range(50):
            F = np.array([root @ root - 1, (root - z) @ (root - z) - spec.r**2])
            J = np.array([2 * root, 2 * (root - z)])
            root = root - np.linalg.solve(J, F)
        assert np.linalg.norm(root - p) < 1e-12


def test_cap_curves(cap, spec):
    assert np.all(np.abs(np.linalg.norm(cap.t_arc(S), axis=1) - 1) < 1e-13)
    assert np.all(np.abs(np.linalg.norm(cap.sigma(S) - spec.z_array, axis=1) - spec.r) < 1e-13)
    assert cap.sigma(0.5) == pytest.approx([0.0, 0.8], abs=1e-15)
    assert cap.t_arc(0.5) == pytest.approx([0.0, 1.0], abs=1e-15)
    for i in (0, 1):
        assert np.linalg.norm(cap.sigma(float(i)) - cap.t_arc(float(i))) < 1e-13
    inner = cap.sigma(S[1:-1])
    assert np.all(np.linalg.norm(inner, axis=1) < 1) and np.all(inner[:, 1] > 0)


def test_t_arc_is_wetted_part(cap, spec):
    mid = cap.t_arc(0.5)
    assert np.linalg.norm(mid - spec.z_array) < spec.r
    assert np.all(cap.t_arc(S)[:, 1] >= 2.6 / 2.8 - 1e-15)


def test_orientation_convention(cap, bumped):
    for b in (cap, bumped):
        # Sigma: outward normal is the tangent rotated clockwise
        t = b.sigma_deriv(S)
        n = b.sigma_normal(S)
        assert np.all(t[:, 0] * n[:, 1] - t[:, 1] * n[:, 0] < 0)
        # T: outward normal (the point itself) lies to the left of the tangent
        t = b.t_deriv(S)
        n = b.t_normal(S)
        assert np.all(t[:, 0] * n[:, 1] - t[:, 1] * n[:, 0] > 0)
    # signed area from the oriented boundary is positive
    assert exact_area(cap) > 0


def test_cap_normals_are_radial(cap, spec):
    n = cap.sigma_normal(S)
    t = cap.sigma_deriv(S)
    assert np.allclose(np.sum(n * t, axis=1), 0, atol=1e-14)


@pytest.mark.parametrize("c, theta", [(-0.15, math.pi / 3), (0.0, math.pi / 2), (0.15, 2 * math.pi / 3)])
def test_contact_angle_at_caps(c, theta):
    b = cap_boundary(cap_from_constants(2, 0.3, c))
    for i in (0, 1):
        th, cn, cm = contact_angle_at(b, i)
        assert th == pytest.approx(theta, abs=1e-12)
        assert cn == pytest.approx(cm, abs=1e-10)


@pytest.mark.parametrize("sp", random_specs(8, seed=3))
def test_contact_angle_random_caps(sp):
    b = cap_boundary(sp)
    for i in (0, 1):
        th, cn, cm = contact_angle_at(b, i)
        assert th == pytest.approx(contact_angle(sp), abs=1e-12)
        assert abs(cn - cm) < 1e-10


def test_zero_perturbation_is_bitwise_cap(spec, cap):
    b = perturbed_boundary(spec, 0.0, [(2, 0.0)])
    assert np.array_equal(b.sigma(S), cap.sigma(S))
    assert np.array_equal(b.sigma_normal(S), cap.sigma_normal(S))
    assert np.array_equal(b.t_arc(S), cap.t_arc(S))


@pytest.mark.parametrize("eps", [-0.1, 0.03, 0.1])
@pytest.mark.parametrize("modes", [[(2, 0.0)], [(1, 0.3), (3, 1.0)]])
def test_perturbation_fixes_corners_and_angles(spec, cap, eps, modes):
    b = perturbed_boundary(spec, eps, modes)
    for i in (0, 1):
        assert np.array_equal(b.corners[i], cap.corners[i])
        assert np.linalg.norm(b.sigma(float(i)) - cap.corners[i]) < 1e-13
        assert contact_angle_at(b, i)[0] == pytest.approx(contact_angle(spec), abs=1e-12)
    assert np.array_equal(b.t_arc(S), cap.t_arc(S))


@pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
def test_radial_deviation_bounded(spec, cap, eps):
    b = perturbed_boundary(spec, eps, [(2, 0.0)])
    s = np.linspace(0, 1, 20001)
    dev = np.max(np.linalg.norm(b.sigma(s) - cap.sigma(s), axis=1))
    assert dev <= eps * spec.r + 1e-15
    assert dev > 0


def test_perturbation_derivative_matches_fd(spec):
    b = perturbed_boundary(spec, 0.1, [(2, 0.4), (5, 1.0)])
    s = np.linspace(0.05, 0.95, 37)
    h = 1e-6
    fd = (b.sigma(s + h) - b.sigma(s - h)) / (2 * h)
    assert np.max(np.abs(fd - b.sigma_deriv(s))) < 1e-7


def test_leaves_domain(spec):
    with pytest.raises(LeavesDomain):
        perturbed_boundary(spec, 0.6, [(4, 0.0)])


def test_reflected_modes_mirror(spec):
    modes = [(2, 0.0), (3, 0.4)]
    a = perturbed_boundary(spec, 0.1, modes)
    b = perturbed_boundary(spec, 0.1, reflected_modes(modes))
    pa = a.sigma(S)
    pb = b.sigma(1 - S)
    assert np.allclose(pa[:, 0], -pb[:, 0], atol=1e-14)
    assert np.allclose(pa[:, 1], pb[:, 1], atol=1e-14)


def test_summary(cap):
    summ = boundary_summary(cap)
    ls, lt = arc_lengths(cap)
    # Sigma is a circular arc of radius 0.6 with opening angle 2*acos(0.785714...)
    half = math.atan2(0.3711537444790448, 1.4 - 2.6 / 2.8)
    assert ls == pytest.approx(0.6 * 2 * half, rel=1e-12)
    assert lt == pytest.approx(2 * math.asin(math.sqrt(1 - (2.6 / 2.8) ** 2)), rel=1e-12)
    assert summ["theta_deg"] == pytest.approx([60.0, 60.0], abs=1e-9)
