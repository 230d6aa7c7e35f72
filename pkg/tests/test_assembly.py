import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fsdtiga.assembly import (
    DofMap,
    assemble,
    assemble_mass,
    build_dofmap,
    cell_batches,
    element_load,
    element_stiffness,
    write_coo,
)
from fsdtiga.errors import ConfigurationError
from fsdtiga.geometry import CLAMPED, PhysicalCase, make_disk, make_rectangle, tag_edge, to_rescaled
from fsdtiga.quadrature import QuadratureRule
from fsdtiga.solver import check_spd
from fsdtiga.splines import element_cells


def _energy(model, dm, v):
    """a(v, v) by direct quadrature of the energy density from nodal values."""
    nn = dm.nnodes
    c = v.reshape(3, nn)
    s = model.sigma
    total = 0.0
    for b in cell_batches(model):
        g = dm.patch_nodes[b.patch_id][b.support]  # (C, n)
        vals = [(np.einsum("cqn,cn->cq", b.R, c[f][g]), np.einsum("cqn,cn->cq", b.Rx, c[f][g]), np.einsum("cqn,cn->cq", b.Ry, c[f][g])) for f in range(3)]
        (_, ux, uy), (p1, p11, p12), (p2, p21, p22) = vals
        shear = 5 / 6 * ((ux + p1) ** 2 + (uy + p2) ** 2)
        bend = (s + 1) / 6 * (p11**2 + p22**2) + s / 3 * p11 * p22 + (p12 + p21) ** 2 / 12
        total += np.sum(b.wq * (shear + bend))
    return total


def test_element_symmetry(small_disk):
    for cell in element_cells(small_disk.patches[1])[:4] + element_cells(small_disk.patches[0])[:2]:
        K = element_stiffness(cell, small_disk).stiffness
        assert np.abs(K - K.T).max() <= 1e-12 * np.abs(K).max()


def test_global_symmetry(small_disk):
    K = assemble(small_disk).K
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()


def test_bending_plus_shear_is_total(small_disk):
    cell = element_cells(small_disk.patches[2])[3]
    Ka = element_stiffness(cell, small_disk).stiffness
    Kb = element_stiffness(cell, small_disk, "bending").stiffness
    Ks = element_stiffness(cell, small_disk, "shear").stiffness
    assert np.allclose(Ka, Kb + Ks, rtol=0, atol=1e-13 * np.abs(Ka).max())
    em = element_stiffness(cell, small_disk, "bending")
    assert np.all(em.block("u", "u") == 0)


@pytest.mark.parametrize("model_name", ["small_disk", "small_rect"])
def test_rigid_modes_in_nullspace(model_name, request):
    model = request.getfixturevalue(model_name)
    sys_ = assemble(model)
    dm = sys_.dofmap
    X = dm.node_coordinates(model)
    nn = dm.nnodes
    Kn = abs(sys_.K).max()
    modes = []
    modes.append(np.concatenate([np.ones(nn), np.zeros(2 * nn)]))
    modes.append(np.concatenate([-X[:, 0], np.ones(nn), np.zeros(nn)]))
    modes.append(np.concatenate([-X[:, 1], np.zeros(nn), np.ones(nn)]))
    for v in modes:
        r = sys_.K @ v
        assert np.abs(r).max() <= 1e-10 * Kn * np.abs(v).max()


def test_energy_matches_independent_quadrature(small_disk, rng):
    sys_ = assemble(small_disk)
    v = rng.standard_normal(sys_.ndofs)
    e = v @ (sys_.K @ v)
    ref = _energy(small_disk, sys_.dofmap, v)
    assert abs(e - ref) <= 1e-12 * abs(ref) * 10


def test_load_vector_total_equals_area(small_disk, small_rect):
    Fr = assemble(small_rect).F
    assert abs(Fr[: Fr.size // 3].sum() - 8.0) <= 1e-12 * 8
    sys_ = assemble(small_disk)
    dm = sys_.dofmap
    Fu = sys_.F[dm.dof("u", np.arange(dm.nnodes))]
    # rational integrand: the p + 1 point rule is accurate, not exact
    assert abs(Fu.sum() - np.pi * 100.0) <= 1e-8 * np.pi * 100
    # psi load of a constant f integrates N_,a, whose sum over all functions vanishes
    for f in ("psi1", "psi2"):
        assert abs(sys_.F[dm.dof(f, np.arange(dm.nnodes))].sum()) <= 1e-11 * np.abs(Fu).max()


def test_element_load_blocks(small_rect):
    cell = element_cells(small_rect.patches[0])[0]
    e = element_load(cell, small_rect, load=2.0)
    (a1, b1), (a2, b2) = cell.bounds
    assert np.isclose(e.load_block("u").sum(), 2.0 * 4.0 * 2.0 * (b1 - a1) * (b2 - a2))


def test_clamped_stiffness_is_spd(clamped_rect):
    K = assemble(clamped_rect).K_free
    assert check_spd(K) > 0


def test_unconstrained_stiffness_is_singular(small_rect):
    K = assemble(small_rect).K
    lam = np.linalg.eigvalsh(K.toarray())
    assert np.sum(np.abs(lam) <= 1e-10 * lam.max()) == 3


def test_load_linearity(clamped_rect):
    a = assemble(clamped_rect, load=1.0)
    b = assemble(clamped_rect, load=3.5)
    assert np.abs(b.F - 3.5 * a.F).max() <= 1e-12 * np.abs(b.F).max()
    assert (a.K != b.K).nnz == 0


def test_spatial_load_function(small_rect):
    a = assemble(small_rect, load=lambda x, y: 1.0 + 0 * x)
    b = assemble(small_rect, load=1.0)
    assert np.array_equal(a.F, b.F)


def test_bit_identical_assembly(small_disk):
    a = assemble(small_disk)
    b = assemble(small_disk)
    assert np.array_equal(a.K.data, b.K.data) and np.array_equal(a.F, b.F)


def test_same_slenderness_gives_same_matrix():
    mats = []
    for h, L in ((0.25, 5.0), (0.5, 10.0)):
        r = to_rescaled(PhysicalCase(thickness=h, length=L, shear_modulus=1e9, nu=0.3, load=1e4, width=L))
        m = make_rectangle(r.length, r.width, 3, nel1=3, nel2=3)
        mats.append(assemble(m, load=1.0).K)
    assert np.array_equal(mats[0].toarray(), mats[1].toarray())


def test_mass_matrix(small_disk):
    M = assemble_mass(small_disk, rule=QuadratureRule(10, 10))
    assert abs(M.sum() - np.pi * 100) <= 1e-10 * np.pi * 100
    assert abs(M - M.T).max() <= 1e-14 * abs(M).max()


def test_fully_constrained_is_rejected():
    m = make_rectangle(1.0, 1.0, 2)
    dm = build_dofmap(m)
    every = DofMap(dm.patch_nodes, dm.nnodes, np.arange(dm.ndofs))
    with pytest.raises(ConfigurationError):
        assemble(m, every)


def test_write_coo(tmp_path):
    K = sp.csr_matrix(np.array([[2.0, 0.5], [0.5, 1.0 / 3.0]]))
    write_coo(K, tmp_path / "k.txt")
    lines = (tmp_path / "k.txt").read_text().splitlines()
    assert lines[0] == "# 2 2 4"
    r, c, v = np.loadtxt(tmp_path / "k.txt", unpack=True)
    back = sp.coo_matrix((v, (r.astype(int), c.astype(int))), shape=(2, 2)).toarray()
    assert np.array_equal(back, K.toarray())


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.49), st.integers(1, 3), st.integers(2, 4))
def test_energy_nonnegative_and_nullspace_dimension(nu, nel, p):
    m = make_rectangle(2.0, 1.5, p, nel1=nel, nel2=nel, nu=nu)
    K = assemble(m).K.toarray()
    lam = np.linalg.eigvalsh(K)
    assert lam.min() >= -1e-10 * lam.max()
    assert np.sum(lam <= 1e-10 * lam.max()) == 3
