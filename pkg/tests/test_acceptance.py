"""Acceptance gate: one test per criterion, one summary line each.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from clawgeo import cli, corpus, hamgeo, numkit, ruledgeo, syscore, webcubic
from clawgeo.exprlang import add, compile_program, evaluate_many, gradient, mul, const, parse_source, var
from clawgeo.ruledgeo import LawPair

INTRO_ROWS = ([1, 0, -1, 0], [0, 1, -1, 0])
FINITE_ROWS = ([2, 1, -3, 0, 0, 0, 0], [1, 1, -2, 0, 0, 0, 0])
RESULTS = {}


def record(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return passed


@pytest.fixture(scope="module")
def intro():
    return syscore.from_source(corpus.read("example_intro"))


@pytest.fixture(scope="module")
def pts(intro):
    return syscore.sample_points(intro, count=100, seed=42)


def test_criterion_1_law_suite(intro, pts):
    laws = intro.canonical_laws() + intro.laws
    worst = max(syscore.check_law(intro, l, pts)["max_residual"] for l in laws)
    weakest = np.inf
    for i in range(intro.n):
        fluxes = list(intro.fluxes)
        fluxes[i] = add(fluxes[i], mul(const(0.01), var(0)))
        bent = syscore.ParametricSystem(intro.var_names, intro.densities, tuple(fluxes))
        bp = syscore.sample_points(intro, bent, count=100, seed=42)
        hit = max(syscore.check_law(bent, l, bp)["max_residual"] for l in intro.laws)
        weakest = min(weakest, hit)
    ok = worst <= 1e-9 and weakest >= 1e-3
    assert record(1, ok, f"5 laws max residual {worst:.2e} (<= 1e-9); perturbed fluxes min residual "
                         f"{weakest:.2e} (>= 1e-3)")


def test_criterion_2_spectral(intro, pts):
    speed_err = angle = 0.0
    for u in pts:
        f = syscore.characteristic_fields(intro, u)
        speeds = f.finite_speeds()
        speed_err = max(speed_err, np.abs(np.sort(speeds) - np.sort(-u)).max())
        a = int(np.argmin(np.abs(speeds + u[0])))
        angle = max(angle, numkit.vector_angle(f.xi(a), [0.0, u[0] - u[1], u[2] - u[0]]))
    ld = syscore.linear_degeneracy(intro, pts)["max_residual"]
    ok = speed_err <= 1e-9 and angle <= 1e-8 and ld <= 1e-6
    assert record(2, ok, f"speed error {speed_err:.2e}; xi1 angle {angle:.2e}; degeneracy {ld:.2e}")


def _corpus_pairs(intro):
    out = [("example_intro", intro, LawPair.from_system(intro))]
    lin = syscore.from_source(corpus.read("linear_diagonal"))
    out.append(("linear_diagonal", lin, LawPair.from_system(lin)))
    for name in ("example_intro", "hamiltonian_cubic"):
        spec = hamgeo.HamiltonianSpec.from_system(syscore.from_source(corpus.read(name)))
        hsys, _ = hamgeo.build_hamiltonian(spec)
        out.append((f"{name} (hamiltonian)", hsys, hamgeo.default_pair(hsys)))
    web, _ = syscore.reciprocal_transform(intro, *INTRO_ROWS)
    out.append(("intro reciprocal", web, LawPair.from_system(web)))
    return out


def test_criterion_3_tangent_stability(intro):
    worst, ranks = 0.0, set()
    for _, sys, pair in _corpus_pairs(intro):
        p = syscore.sample_points(sys, count=100, seed=42)
        rep = ruledgeo.tangent_stability(sys, pair, p)
        worst = max(worst, rep["max_residual"])
        ranks |= {q["rank"] - sys.n for q in rep["per_point"]}
    c = intro.canonical_laws()
    try:
        ruledgeo.tangent_stability(intro, LawPair(c[0], c[0]), syscore.sample_points(intro, count=20))
        detected = False
    except Exception as exc:  # noqa: BLE001
        detected = type(exc).__name__ == "DegenerateHypersurfaceError"
    ok = ranks == {2} and worst <= 1e-8 and detected
    assert record(3, ok, f"frame rank n+{sorted(ranks)}; projection residual {worst:.2e}; "
                         f"degenerate control detected: {detected}")


def test_criterion_4_duality(intro, pts):
    fin, _ = syscore.reciprocal_transform(intro, *FINITE_ROWS)
    cases = [("intro", intro, LawPair.from_system(intro), pts)]
    fpair = LawPair.from_system(fin)
    fdual = ruledgeo.dual_system(fin, fpair)
    cases.append(("finite frame", fin, fpair, syscore.sample_points(fin, fdual[0], count=100, seed=42)))
    laws = shared = struct = bidual = 0.0
    for _, sys, pair, p in cases:
        dual = ruledgeo.dual_system(sys, pair, p[:8])
        laws = max(laws, ruledgeo.dual_laws_report(sys, pair, p, dual)["max_residual"])
        shared = max(shared, ruledgeo.shared_char_fields_check(sys, pair, p, dual=dual)["max_residual"])
        struct = max(struct, ruledgeo.structure_agreement(sys, dual[0], p[:25])["max_residual"])
        bidual = max(bidual, ruledgeo.biduality_check(sys, pair, p, dual=dual)["max_residual"])
    ok = laws <= 1e-9 and shared <= 1e-6 and struct <= 1e-4 and bidual <= 1e-7
    assert record(4, ok, f"dual laws {laws:.2e}; shared directions {shared:.2e}; structure {struct:.2e}; "
                         f"biduality {bidual:.2e}")


def test_criterion_5_hamiltonian(intro):
    spec = hamgeo.HamiltonianSpec.from_system(intro)
    hsys, _ = hamgeo.build_hamiltonian(spec)
    p = syscore.sample_points(hsys, count=100, seed=42)
    out = hamgeo.hamiltonian_suite(spec, p)
    v = evaluate_many([hsys.law("hlaw").flux, intro.law("sigma5").flux], p)
    flux = float(np.abs(2 * v[:, 0] - v[:, 1]).max())
    q, l, a = (out[k]["max_residual"] for k in ("quadric", "legendre", "autoduality"))
    ok = q <= 1e-9 and l <= 1e-9 and a <= 1e-8 and flux <= 1e-9
    assert record(5, ok, f"quadric {q:.2e}; Legendre {l:.2e}; autoduality {a:.2e}; 2*hflux - (b^2-ac) {flux:.2e}")


def test_criterion_6_reciprocal_focal(intro, pts):
    web, _ = syscore.reciprocal_transform(intro, *INTRO_ROWS)
    wp = syscore.sample_points(intro, web, count=100, seed=42)
    want = [numkit.ProjectiveValue(1.0, 0.0), numkit.ProjectiveValue(0.0, 1.0), numkit.ProjectiveValue(1.0, -1.0)]
    speed = max(max(s.distance(w) for s, w in zip(syscore.characteristic_fields(web, u).speeds, want))
                for u in wp)
    foc = ruledgeo.focal_report(web, LawPair.from_system(web), wp)
    base = ruledgeo.focal_report(intro, LawPair.from_system(intro), pts)
    base_min = min(f["residual"] for f in base["per_point"])
    ok = speed <= 1e-8 and foc["max_residual"] <= 1e-8 and base_min >= 1e-2
    assert record(6, ok, f"speed deviation {speed:.2e}; transformed focal residual {foc['max_residual']:.2e} "
                         f"(<= 1e-8); untransformed min family residual {base_min:.2e} (needs >= 1e-2)")


def test_criterion_7_web_cubic(intro):
    web, _ = syscore.reciprocal_transform(intro, *INTRO_ROWS)
    laws = web.canonical_laws() + web.laws
    fit = syscore.sample_points(web, count=40, seed=42)
    held = syscore.sample_points(web, count=100, seed=43)
    out = webcubic.web_cubic_suite(web, laws, fit, held, seed=42)
    ok = (out["abelian"]["rank"] == 5 and out["pqr"]["max_residual"] <= 1e-8 and out["nullity"] >= 1
          and out["fit_residual"] <= 1e-8 and out["holdout_residual"] <= 1e-7
          and out["line_residual"] <= 1e-8 and out["random_nullity"] == 0)
    assert record(7, ok, f"rank {out['abelian']['rank']}; P/Q/R {out['pqr']['max_residual']:.2e}; nullity "
                         f"{out['nullity']}; fit {out['fit_residual']:.2e}; held-out {out['holdout_residual']:.2e}; "
                         f"lines {out['line_residual']:.2e}; random nullity {out['random_nullity']}")


def test_criterion_8_temple_bridge(intro):
    bridge = cli.temple_bridge(intro, 100, 42)
    d = bridge["dual_of_finite_frame"]["max_residual"]
    a = bridge["abc_coordinates"]["max_residual"]
    ok = d <= 1e-5 and a <= 1e-5
    assert record(8, ok, f"dual of constant-speed system {d:.2e}; (a,b,c) coordinates {a:.2e} (<= 1e-5)")


def test_criterion_9_oracles(intro, pts, tmp_path):
    rng = np.random.default_rng(5)
    fd = 0.0
    for name in corpus.names():
        spec = parse_source(corpus.read(name))
        exprs = list(spec.fluxes) + [e for l in spec.laws for e in (l.density, l.flux)]
        if spec.hamiltonian is not None:
            exprs.append(spec.hamiltonian.h)
        n = spec.n
        P = rng.uniform(0.6, 1.7, (100, n))
        for e in exprs:
            g = compile_program(gradient(e, n))(P)
            f = compile_program((e,))
            for i in range(n):
                h = np.zeros(n)
                h[i] = 1e-5
                num = (f(P + h)[:, 0] - f(P - h)[:, 0]) / 2e-5
                fd = max(fd, float(np.max(np.abs(num - g[:, i]) / np.maximum(1.0, np.abs(g[:, i])))))
    eig = 0.0
    _, _, _, dF = intro.evaluate(pts)
    for J in dF:
        s = numkit.eigen(J)
        eig = max(eig, float(np.abs(J @ s.right - s.right * s.values).max() / np.linalg.norm(J, 2)))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    t0 = time.perf_counter()
    status = cli.main(["all", "-o", str(a)])
    elapsed = time.perf_counter() - t0
    cli.main(["all", "-o", str(b)])
    same = a.read_bytes() == b.read_bytes()
    ok = fd <= 1e-6 and eig <= 1e-9 and same and elapsed < 60 and status in (0, 1)
    assert record(9, ok, f"symbolic vs FD {fd:.2e}; eigen residual {eig:.2e}; `all` deterministic {same}, "
                         f"{elapsed:.1f} s, exit {status}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
