import itertools
import math

import numpy as np
import pytest

from serrinlab.boundary2d import exact_area, perturbed_boundary
from serrinlab.errors import InvertedElement, MeshInvalid
from serrinlab.mesh2d import euler_characteristic, generate, mesh_edges, read_mesh, refine, write_mesh


def _enumerate_counts(n_s, n_t):
    """Count vertices and triangles of the blended grid by brute force."""
    key = {}
    for i, j in itertools.product(range(n_s + 1), range(n_t + 1)):
        key[(i, j)] = "p1" if i == 0 else "p2" if i == n_s else (i, j)
    n_vert = len(set(key.values()))
    n_tri = 0
    for i, j in itertools.product(range(n_s), range(n_t)):
        quad = [key[(i, j)], key[(i + 1, j)], key[(i + 1, j + 1)], key[(i, j + 1)]]
        for tri in (quad[:3], [quad[0], quad[2], quad[3]]):
            n_tri += len(set(tri)) == 3
    return n_vert, n_tri


@pytest.mark.parametrize("n_s, n_t", [(8, 4), (4, 2), (16, 3)])
def test_counts(cap, n_s, n_t):
    m = generate(cap, n_s, n_t)
    assert (m.n_vertices, m.n_triangles) == _enumerate_counts(n_s, n_t)


def test_counts_reference(cap):
    m = generate(cap, 8, 4)
    assert m.n_vertices == 37
    assert m.n_triangles == 56


def test_topology_and_orientation(cap, bumped):
    for b in (cap, bumped):
        m = generate(b, 12, 3)
        assert euler_characteristic(m) == 1
        assert np.all(m.signed_areas() > 0)
        used = np.unique(m.triangles)
        assert np.array_equal(used, np.arange(m.n_vertices))


def test_no_hanging_vertices(cap):
    m = generate(cap, 10, 4)
    edges, _ = mesh_edges(m.triangles)
    count = {}
    for k, tri in enumerate(m.triangles):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            e = tuple(sorted((tri[a], tri[b])))
            count[e] = count.get(e, 0) + 1
    boundary = {tuple(sorted(e)) for e in m.edge_vertices}
    for e, n in count.items():
        assert n == (1 if e in boundary else 2)


def test_boundary_vertices_on_curves(cap, spec):
    m = generate(cap, 32, 8)
    z = spec.z_array
    for k in m.boundary_edges("Sigma"):
        for v in m.edge_vertices[k]:
            assert abs(np.linalg.norm(m.vertices[v] - z) - spec.r) < 1e-12
    for k in m.boundary_edges("T"):
        for v in m.edge_vertices[k]:
            assert abs(np.linalg.norm(m.vertices[v]) - 1) < 1e-12
    for k in range(len(m.edge_tags)):
        s_mid = m.edge_params[k].mean()
        assert np.allclose(m.edge_midpoints[k], cap.curve(m.edge_tags[k], s_mid), atol=0)


def test_tag_partition(bumped):
    m = generate(bumped, 16, 4)
    for tag in ("Sigma", "T"):
        ids = m.boundary_edges(tag)
        p = m.edge_params[ids]
        order = np.argsort(p[:, 0])
        p = p[order]
        assert p[0, 0] == 0.0 and p[-1, 1] == 1.0
        assert np.array_equal(p[1:, 0], p[:-1, 1])
        chain = m.edge_vertices[ids][order]
        assert np.array_equal(chain[1:, 0], chain[:-1, 1])


def test_refine_ratio(cap, spec):
    m = generate(cap, 8, 4)
    r = refine(m)
    assert r.resolution == (16, 8)
    assert 1.8 <= m.h / r.h <= 2.2
    assert r.n_triangles / m.n_triangles == pytest.approx(4, rel=0.15)
    ids = r.boundary_edges("Sigma")
    d = np.linalg.norm(r.vertices[r.edge_vertices[ids].ravel()] - spec.z_array, axis=1)
    assert np.max(np.abs(d - spec.r)) < 1e-12


def test_area_converges_second_order(bumped):
    exact = exact_area(bumped)
    errs, hs = [], []
    for n in (16, 32, 64):
        m = generate(bumped, n, n // 4)
        errs.append(abs(m.signed_areas().sum() - exact))
        hs.append(m.h)
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9


def test_inverted_element_reported(spec):
    b = perturbed_boundary(spec, -0.3, [(8, 0.0)])
    with pytest.raises(InvertedElement) as info:
        generate(b, 16, 4)
    assert info.value.where is not None


def test_resolution_limits(cap):
    with pytest.raises(MeshInvalid):
        generate(cap, 3, 2)
    with pytest.raises(MeshInvalid):
        generate(cap, 8, 1)


def test_text_round_trip(bumped):
    m = generate(bumped, 12, 3)
    text = write_mesh(m)
    assert text.startswith("lensmesh 1\n")
    m2, dofs = read_mesh(text, source=bumped)
    assert dofs is None
    assert write_mesh(m2) == text
    assert np.array_equal(m2.vertices, m.vertices)
    assert np.array_equal(m2.triangles, m.triangles)
    assert m2.edge_tags == m.edge_tags
    assert np.array_equal(m2.edge_midpoints, m.edge_midpoints)
    assert m2.resolution == m.resolution


def test_text_round_trip_with_dofs(cap):
    m = generate(cap, 8, 2)
    vals = np.random.default_rng(0).standard_normal(m.n_vertices)
    m2, dofs = read_mesh(write_mesh(m, dofs=vals))
    assert np.array_equal(dofs, vals)


def test_bad_header():
    with pytest.raises(MeshInvalid):
        read_mesh("trimesh 2\n0\n0\n0\n")
