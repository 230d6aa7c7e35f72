"""Acceptance criteria, one test and one PASS/FAIL report line per criterion.

Disk refinement ladder: 6, 12, 24, 48 cells per patch side (48 gives
37,803 dofs at p = 3).  L2 magnitudes and slopes use the rooted normalized
error; the unrooted ratio is printed next to it.
"""
import numpy as np
import pytest

from fsdtiga.analytic import CantileverBeam, ClampedDisk, SimplySupportedBeam, SimplySupportedDisk, kirchhoff_gap
from fsdtiga.assembly import assemble, build_dofmap
from fsdtiga.cases import CaseConfig, oracle_for, run, solve_case
from fsdtiga.geometry import CLAMPED, SIMPLY_SUPPORTED, PhysicalCase, make_disk, make_rectangle, tag_edge, to_rescaled
from fsdtiga.postprocess import ConvergenceStudy, convergence_row, fit_slope, interpolate, sample_line
from fsdtiga.solver import check_spd, solve_linear, solve_model, solve_system
from fsdtiga.splines import KnotVector, basis_ders

LADDER = (6, 12, 24, 48)
RADII = (10.0, 100.0, 1000.0)
_studies: dict = {}


def study(boundary, R, p):
    key = (boundary, R, p)
    if key not in _studies:
        oracle = (ClampedDisk if boundary == CLAMPED else SimplySupportedDisk)(R)
        s = ConvergenceStudy()
        for n in LADDER:
            sol, _ = solve_model(make_disk(R, p, elements=n, boundary=boundary))
            s.rows.append(convergence_row(sol, oracle, (0.0, 0.0), n))
        _studies[key] = s
    return _studies[key]


def _slope_report(boundary):
    parts, ok = [], True
    for p in (2, 3):
        for R in RADII:
            s = study(boundary, R, p)
            k = s.slope
            ok &= k >= p + 0.5
            parts.append(f"p{p} R{R:g}: {k:.2f}")
    return ok, parts


def test_criterion_1_clamped_center_deflection(report):
    tol = {10.0: 1e-6, 100.0: 1e-4, 1000.0: 1e-2}
    reference = {10.0: 6.8624999985e2, 100.0: 6.5654998877e6, 1000.0: 6.5625189222e10}
    parts, ok = [], True
    for R in RADII:
        row = study(CLAMPED, R, 3).rows[-1]
        ok &= row.ndofs >= 35000 and row.deflection_error <= tol[R]
        dt = abs(row.deflection - reference[R]) / reference[R]
        parts.append(f"R{R:g}: u(0)={row.deflection:.10g} rel.err={row.deflection_error:.2e} (<= {tol[R]:g}; vs reference {dt:.1e})")
    parts.insert(0, f"ndofs={study(CLAMPED, 10.0, 3).rows[-1].ndofs}")
    assert report("criterion 1 (clamped disk center deflection)", ok, "; ".join(parts))


def test_criterion_2_l2_magnitudes(report):
    r10 = study(CLAMPED, 10.0, 3).rows[-1]
    r1000 = study(CLAMPED, 1000.0, 3).rows[-1]
    ok = r10.l2_error_rooted <= 5e-7 and r1000.l2_error_rooted <= 3e-5
    detail = (
        f"R10 {r10.ndofs} dofs: rooted {r10.l2_error_rooted:.2e} (<= 5e-7), ratio {r10.l2_error:.2e}; "
        f"R1000: rooted {r1000.l2_error_rooted:.2e} (<= 3e-5), ratio {r1000.l2_error:.2e}"
    )
    assert report("criterion 2 (L2 error magnitudes)", ok, detail)


def test_criterion_3_locking_free_rates_clamped(report):
    ok, parts = _slope_report(CLAMPED)
    assert report("criterion 3 (clamped disk slopes >= p + 0.5)", ok, "; ".join(parts))


def test_criterion_4_rates_simply_supported(report):
    ok, parts = _slope_report(SIMPLY_SUPPORTED)
    assert report("criterion 4 (simply supported disk slopes >= p + 0.5)", ok, "; ".join(parts))


def _centerline_deviation(case, L, D, elements, hi):
    cfg = CaseConfig(case, length=L, width=D, elements=elements)
    sol, _ = solve_case(cfg)
    o = oracle_for(cfg)
    line = sample_line(sol, (0.0, 0.0), (L, 0.0), 201)
    s = line["s"]
    m = (s >= 0.1 * L - 1e-12) & (s <= hi * L + 1e-12)
    ex = o.u_true(s[m])
    return float(np.max(np.abs(line["u_true"][m] - ex) / np.abs(ex))), sol, line


def test_criterion_5_cantilever_beam_limit(report):
    devs = [_centerline_deviation("rect_cantilever", 10.0, D, (32, 64), 1.0)[0] for D in (1.0, 10.0, 100.0)]
    ok = devs[0] > devs[1] > devs[2] and devs[2] <= 0.01
    detail = "max rel. deviation of u_true on [0.1L, L]: " + ", ".join(f"D{D:g}: {d:.2e}" for D, d in zip((1, 10, 100), devs))
    assert report("criterion 5 (cantilever -> beam)", ok, detail)


def test_criterion_6_simply_supported_strip(report):
    parts, ok = [], True
    for L, el in ((3.0, (16, 64)), (10.0, (32, 64))):
        dev, sol, line = _centerline_deviation("rect_ss", L, 100.0, el, 0.9)
        mid = abs(sol.at_points([L / 2], [0.0])["psi1"][0]) / np.abs(line["psi1"]).max()
        ok &= dev <= 0.01 and mid <= 1e-6
        parts.append(f"L{L:g}: dev {dev:.2e} (<= 1e-2), |psi(L/2)|/max|psi| {mid:.1e} (<= 1e-6)")
    assert report("criterion 6 (simply supported strip)", ok, "; ".join(parts))


def test_criterion_7_property_suite(report, rng):
    checks = {}
    # partition of unity and derivative sums
    kv = KnotVector.uniform(3, 7)
    pu = max(abs(basis_ders(kv, x, 3)[0].sum() - 1) for x in rng.random(200))
    ds = max(np.abs(basis_ders(kv, x, 3)[1:].sum(1)).max() / 7**3 for x in rng.random(200))
    checks["PU"] = (pu, pu <= 1e-12)
    checks["dsum"] = (ds, ds <= 1e-10)
    disk = make_disk(10.0, 3, elements=3)
    rect = make_rectangle(4.0, 2.0, 3, 2, 3, 2)
    for name, m, tol in (("nullspace rect", rect, 1e-10), ("nullspace disk", disk, 1e-8)):
        free = make_disk(10.0, 3, elements=3, boundary="free") if m is disk else m
        S = assemble(free)
        X = S.dofmap.node_coordinates(free)
        nn = S.dofmap.nnodes
        z, o = np.zeros(nn), np.ones(nn)
        modes = [np.r_[o, z, z], np.r_[-X[:, 0], o, z], np.r_[-X[:, 1], z, o]]
        worst = max(np.abs(S.K @ v).max() / (abs(S.K).max() * np.abs(v).max()) for v in modes)
        checks[name] = (worst, worst <= tol)
    S = assemble(disk)
    sym = abs(S.K - S.K.T).max() / abs(S.K).max()
    checks["symmetry"] = (sym, sym <= 1e-12)
    clamped = make_rectangle(6.0, 4.0, 3, 3, 4, 3)
    for e in ("left", "right", "bottom", "top"):
        clamped = tag_edge(clamped, 0, e, CLAMPED)
    lam = check_spd(assemble(clamped).K_free)
    checks["SPD"] = (lam, lam > 0)
    x0, _ = solve_system(assemble(disk, load=0.0))
    checks["zero load"] = (np.abs(x0).max(), not np.any(x0))
    a, b = assemble(disk, load=1.0), assemble(disk, load=2.5)
    xa, _ = solve_linear(a.K_free, a.F_free)
    xb, _ = solve_linear(b.K_free, b.F_free)
    lin = max(np.abs(b.F - 2.5 * a.F).max() / np.abs(b.F).max(), np.abs(xb - 2.5 * xa).max() / np.abs(xb).max())
    checks["linearity"] = (lin, lin <= 1e-12)
    sol0, _ = solve_model(make_disk(10.0, 3, elements=3, nu=0.0))
    q = sol0.at_points([0.0, 3.0], [0.0, 4.0])
    checks["u_true=u at nu=0"] = (np.abs(q["u_true"] - q["u"]).max(), np.array_equal(q["u_true"], q["u"]))
    # energy: v^T K v against quadrature of the energy density
    from test_assembly import _energy

    v = rng.standard_normal(S.ndofs)
    e = v @ (S.K @ v)
    ref = _energy(disk, S.dofmap, v)
    checks["energy"] = (abs(e - ref) / abs(ref), abs(e - ref) <= 1e-12 * abs(ref))
    mats = []
    for h, L in ((0.25, 5.0), (0.5, 10.0)):
        r = to_rescaled(PhysicalCase(thickness=h, length=L, shear_modulus=1e9, nu=0.3, load=1e4, width=L))
        mats.append(assemble(make_rectangle(r.length, r.width, 3, nel1=3, nel2=3), load=1.0))
    same = np.array_equal(mats[0].K.toarray(), mats[1].K.toarray()) and np.array_equal(mats[0].F, mats[1].F)
    checks["h-independence"] = (0.0 if same else 1.0, same)
    ok = all(c[1] for c in checks.values())
    detail = "; ".join(f"{k} {v:.1e}{'' if good else ' FAIL'}" for k, (v, good) in checks.items())
    assert report("criterion 7 (property suite)", ok, detail)


def test_criterion_8_kirchhoff_gap(report):
    parts, ok = [], True
    for R in RADII:
        o = ClampedDisk(R)
        gap = o.center_deflection - float(o.u_kirchhoff(0.0))
        rel = abs(gap - kirchhoff_gap(R)) / kirchhoff_gap(R)
        ok &= rel <= 1e-8
        parts.append(f"analytic R{R:g}: {rel:.1e}")
    # numeric FSDT deflection: gap error is the discretization error of u_h(0)
    for R in (10.0, 100.0):
        o = ClampedDisk(R)
        uh = study(CLAMPED, R, 3).rows[-1].deflection
        rel = abs(uh - float(o.u_kirchhoff(0.0)) - kirchhoff_gap(R)) / kirchhoff_gap(R)
        ok &= rel <= 1e-4
        parts.append(f"numeric R{R:g}: {rel:.1e} (<= 1e-4)")
    uh = study(CLAMPED, 1000.0, 3).rows[-1].deflection
    o = ClampedDisk(1000.0)
    rel = abs(uh - float(o.u_kirchhoff(0.0)) - kirchhoff_gap(1000.0)) / kirchhoff_gap(1000.0)
    parts.append(f"numeric R1000 (gap is 5e-6 of u, info only): {rel:.1e}")
    assert report("criterion 8 (Kirchhoff gap)", ok, "; ".join(parts))


def test_criterion_9_exclusions_and_concrete_slab(report, tmp_path):
    # solid-element curves and the quoted slab deflection are not targets;
    # the slab demo is checked for consistency with thin plate theory
    cfg = CaseConfig(
        "rect_clamped_all", E=22.95e9, nu=0.3, length=1.0, width=1.0, thickness=0.05, density=2400.0, refine=4, out=str(tmp_path)
    )
    res = run(cfg)
    ratio = res["u_mm"] / res["kirchhoff_mm"]
    ok = 1.0 < ratio < 1.15
    detail = (
        f"excluded: solid-element comparison curves, quoted slab value; slab demo u = {res['u_mm']:.4g} mm, "
        f"thin plate {res['kirchhoff_mm']:.4g} mm, ratio {ratio:.3f} (in (1, 1.15))"
    )
    assert report("criterion 9 (exclusions; slab consistency)", ok, detail)
