import numpy as np
import pytest

from fsdtiga.analytic import CantileverBeam, ClampedDisk, SimplySupportedBeam
from fsdtiga.assembly import build_dofmap
from fsdtiga.errors import DomainError
from fsdtiga.geometry import CLAMPED, SIMPLY_SUPPORTED, make_disk, make_rectangle, tag_edge
from fsdtiga.postprocess import (
    SolutionField,
    fit_slope,
    interpolate,
    l2_error,
    locate_points,
    sample_line,
    strong_residual,
)
from fsdtiga.solver import solve_model


def _strip(kind, L=3.0, D=2.0, p=4, nu=0.0, nel=(3, 2)):
    m = make_rectangle(L, D, p, nel1=nel[0], nel2=nel[1], nu=nu)
    m = tag_edge(m, 0, "left", CLAMPED if kind == "cantilever" else SIMPLY_SUPPORTED)
    if kind == "ss":
        m = tag_edge(m, 0, "right", SIMPLY_SUPPORTED)
    return m


def test_constant_and_linear_reproduction(small_disk, rng):
    f = interpolate(small_disk, [lambda x, y: 2.0 + 0 * x, lambda x, y: 0.5 * x - y, lambda x, y: 3.0 * y])
    x = rng.uniform(-6, 6, 30)
    y = rng.uniform(-6, 6, 30)
    q = f.at_points(x, y)
    assert np.allclose(q["u"], 2.0, atol=1e-11)
    assert np.allclose(q["psi1"], 0.5 * x - y, atol=1e-10)
    assert np.allclose(q["psi2"], 3.0 * y, atol=1e-10)
    # div psi = 3.5, so u_true = 2 - sigma / 60 * 3.5
    assert np.allclose(q["u_true"], 2.0 - f.sigma / 60 * 3.5, atol=1e-10)


def test_rigid_mode_has_no_shear(small_disk, rng):
    f = interpolate(small_disk, [lambda x, y: -x + 2 * y, lambda x, y: 1.0 + 0 * x, lambda x, y: -2.0 + 0 * x])
    x, y = rng.uniform(-6, 6, (2, 25))
    phi = f.shear_angles(x, y)
    assert np.abs(phi).max() <= 1e-10


def test_gradients_match_finite_differences(small_disk):
    f = interpolate(small_disk, [lambda x, y: np.sin(x / 3) * np.cos(y / 4), lambda x, y: 0 * x, lambda x, y: 0 * x])
    x0, y0, h = np.array([1.3, -4.1, 0.2]), np.array([2.2, 3.0, -7.5]), 1e-5
    q = f.at_points(x0, y0)
    dx = (f.at_points(x0 + h, y0)["u"] - f.at_points(x0 - h, y0)["u"]) / (2 * h)
    dy = (f.at_points(x0, y0 + h)["u"] - f.at_points(x0, y0 - h)["u"]) / (2 * h)
    assert np.allclose(q["phi1"], dx, atol=1e-8)
    assert np.allclose(q["phi2"], dy, atol=1e-8)


@pytest.mark.parametrize("kind,oracle", [("cantilever", CantileverBeam(3.0, 0.0)), ("ss", SimplySupportedBeam(3.0, 0.0))])
def test_zero_poisson_strip_is_solved_exactly(kind, oracle):
    # for nu = 0 the beam solution solves the strip problem and lies in the quartic space
    sol, _ = solve_model(_strip(kind))
    x = np.linspace(0, 3.0, 13)
    q = sol.at_points(x, 0.37 + 0 * x)
    scale = np.abs(oracle.u(x)).max()
    assert np.abs(q["u"] - oracle.u(x)).max() <= 1e-9 * scale
    assert np.abs(q["psi1"] - oracle.psi(x)).max() <= 1e-9 * np.abs(oracle.psi(x)).max()
    assert np.abs(q["psi2"]).max() <= 1e-9 * np.abs(oracle.psi(x)).max()
    # sigma = 0: corrected and raw deflection coincide
    assert np.array_equal(q["u_true"], q["u"])
    assert l2_error(sol, oracle, "u", rooted=True) <= 1e-9


def test_strong_residual_vanishes_for_exact_field():
    o = CantileverBeam(3.0, 0.3, 1.0)
    m = make_rectangle(3.0, 2.0, 4, nel1=2, nel2=2, nu=0.3)
    f = interpolate(m, [lambda x, y: o.u(x), lambda x, y: o.psi(x), lambda x, y: 0 * x])
    r = strong_residual(f, load=1.0)
    assert max(r.values()) <= 1e-8


def test_strong_residual_of_zero_field_is_load(small_disk):
    f = SolutionField(small_disk, build_dofmap(small_disk), np.zeros((3, build_dofmap(small_disk).nnodes)))
    r = strong_residual(f, load=2.5)
    assert r["u_max"] == pytest.approx(2.5) and r["psi1_max"] == 0.0


def test_strong_residual_decreases_with_refinement():
    vals = []
    for n in (2, 4, 8):
        sol, _ = solve_model(make_disk(10.0, 3, elements=n))
        vals.append(strong_residual(sol)["u_mean"])
    assert vals[0] > vals[1] > vals[2]


def test_strong_residual_needs_second_derivatives():
    m = make_rectangle(1.0, 1.0, 2)
    f = SolutionField(m, build_dofmap(m), np.zeros((3, build_dofmap(m).nnodes)))
    assert strong_residual(f, load=1.0)["u_max"] == pytest.approx(1.0)


def test_l2_error_properties(small_disk):
    o = ClampedDisk(10.0)
    exact = interpolate(small_disk, [lambda x, y: o.field("u", x, y), lambda x, y: 0 * x, lambda x, y: 0 * x])
    twice = SolutionField(small_disk, exact.dofmap, 2 * exact.coeffs)
    zero = SolutionField(small_disk, exact.dofmap, 0 * exact.coeffs)
    e = l2_error(exact, o)
    assert e < 1e-6
    assert l2_error(zero, o) == pytest.approx(1.0)
    assert l2_error(twice, o, rooted=True) == pytest.approx(1.0, abs=2e-3)
    # invariance under common scaling of field and oracle
    o3 = ClampedDisk(10.0, load=3.0)
    thrice = SolutionField(small_disk, exact.dofmap, 3 * exact.coeffs)
    assert l2_error(thrice, o3) == pytest.approx(e, rel=1e-10)
    with pytest.raises(ValueError):
        l2_error(exact, o, "moment")
    with pytest.raises(ValueError):
        l2_error(exact, lambda x, y: 0 * x)


def test_sample_line_on_clamped_disk():
    sol, _ = solve_model(make_disk(10.0, 3, elements=4))
    line = sample_line(sol, (0.0, 0.0), (10.0, 0.0), 21)
    assert line["s"][0] == 0 and line["s"][-1] == 10.0
    assert abs(line["u"][-1]) <= 1e-12 and abs(line["psi_t"][-1]) <= 1e-12
    assert np.allclose(line["psi_n"], 0.0, atol=1e-6 * np.abs(line["psi_t"]).max())
    o = ClampedDisk(10.0)
    assert np.allclose(line["u"], o.u(line["s"]), rtol=0, atol=2e-3 * o.center_deflection)
    with pytest.raises(ValueError):
        sample_line(sol, (0, 0), (0, 0))


def test_recovered_shear_close_to_direct():
    sol, _ = solve_model(make_disk(10.0, 3, elements=6))
    x, y = np.array([1.0, 3.0, -5.0]), np.array([0.5, -2.0, 4.0])
    direct = sol.shear_angles(x, y)
    rec = sol.shear_angles(x, y, recovered=True)
    exact = -0.6 * np.stack([x, y])
    assert np.abs(rec - exact).max() <= 0.05 * np.abs(exact).max()
    assert np.abs(direct - exact).max() <= 0.05 * np.abs(exact).max()


def test_locate_points(small_disk):
    loc = locate_points(small_disk, [0.0, 9.99, -3.0], [0.0, 0.0, 8.0])
    assert loc.patch[0] == 0 and loc.patch[1] != 0
    with pytest.raises(DomainError):
        locate_points(small_disk, [10.5], [0.0])


def test_fit_slope():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    assert fit_slope(h, 3 * h**4) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        fit_slope(h[:2], h[:2])
    with pytest.raises(ValueError):
        fit_slope(h, np.array([1e-3, 1e-10, 1e-11, 1e-12]))
