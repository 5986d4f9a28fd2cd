import numpy as np
import pytest

from pplogistic.discretization import assemble_levels, assemble_operator, build_mesh, sample_levels

from conftest import make_spec


def test_mesh_spacing():
    mesh = build_mesh(make_spec(), 9, 10)
    assert mesh.h == pytest.approx(0.1)
    assert mesh.dt == pytest.approx(0.1)


def test_mesh_spacing_wider_domain():
    assert build_mesh(make_spec(domain="0 2"), 3, 4).h == pytest.approx(0.5)


def test_mesh_rejects_tiny_grid():
    with pytest.raises(ValueError):
        build_mesh(make_spec(), 2, 8)


def test_default_resolution_from_file():
    mesh = build_mesh(make_spec(grid="19 12"))
    assert (mesh.nx, mesh.nt) == (19, 12)


def test_dirichlet_laplacian_rows():
    spec = make_spec()
    op = assemble_operator(spec, build_mesh(spec, 3, 4), 0.0)
    A = op.dense()
    assert A.shape == (3, 3)
    np.testing.assert_allclose(A[1], [-16.0, 32.0, -16.0])
    np.testing.assert_allclose(np.diag(A), 32.0)


def test_constant_potential_shifts_diagonal():
    spec = make_spec(potential="5")
    A = assemble_operator(spec, build_mesh(spec, 3, 4), 0.0).dense()
    np.testing.assert_allclose(np.diag(A), 37.0)
    assert A[0, 1] == pytest.approx(-16.0)


def test_extra_potential_adds_to_diagonal():
    spec = make_spec()
    mesh = build_mesh(spec, 3, 4)
    A = assemble_operator(spec, mesh, 0.0, extra_potential=np.full(mesh.nx + 2, 2.0)).dense()
    np.testing.assert_allclose(np.diag(A), 34.0)


def test_neumann_rows_annihilate_constants():
    spec = make_spec(lo="robin 0", hi="robin 0")
    mesh = build_mesh(spec, 7, 4)
    A = assemble_operator(spec, mesh, 0.0).dense()
    assert A.shape == (9, 9)
    np.testing.assert_allclose(A.sum(axis=1), 0.0, atol=1e-9)


def test_robin_beta_enters_boundary_row_only():
    spec0 = make_spec(lo="robin 0", hi="robin 0")
    spec1 = make_spec(lo="robin 0", hi="robin 2")
    mesh = build_mesh(spec0, 7, 4)
    d = assemble_operator(spec1, mesh, 0.0).dense() - assemble_operator(spec0, mesh, 0.0).dense()
    nz = np.argwhere(np.abs(d) > 1e-12)
    assert nz.tolist() == [[8, 8]]
    assert d[8, 8] > 0


def test_off_diagonals_nonpositive_with_strong_drift():
    spec = make_spec(drift="200 * sin(2 * pi * x)")
    ops = assemble_levels(spec, build_mesh(spec, 20, 4))
    assert np.all(ops.lower[:, 1:] <= 0) and np.all(ops.upper[:, :-1] <= 0)
    assert ops.upwind_rows


def test_centred_drift_is_second_order():
    # -u'' + b u' applied to sin(pi x), b = 1: exact pi^2 sin + pi cos
    spec = make_spec(drift="1")
    errs = []
    for nx in (39, 79):
        mesh = build_mesh(spec, nx, 4)
        x = mesh.nodes
        Au = assemble_operator(spec, mesh, 0.0).matvec(np.sin(np.pi * x))
        exact = np.pi**2 * np.sin(np.pi * x) + np.pi * np.cos(np.pi * x)
        errs.append(np.max(np.abs(Au - exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_sample_levels_shape_and_periodicity():
    spec = make_spec(m="sin(2 * pi * t)")
    mesh = build_mesh(spec, 5, 8)
    m = sample_levels(spec, mesh, "m")
    assert m.shape == (9, 7)
    np.testing.assert_allclose(m[0], m[-1], atol=1e-15)
