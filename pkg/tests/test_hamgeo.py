from fractions import Fraction

import numpy as np
import pytest

from clawgeo import corpus, hamgeo, syscore
from clawgeo.errors import InvalidEtaError
from clawgeo.exprlang import add, compile_program, evaluate_many, gradient, parse_expr, var
from clawgeo.ruledgeo import LawPair, _p_r, _pair_values
from clawgeo.syscore import ConservationLaw

NAMES = ("u1", "u2", "u3")


@pytest.fixture(scope="module")
def spec(intro):
    return hamgeo.HamiltonianSpec.from_system(intro)


@pytest.fixture(scope="module")
def ham(spec):
    return hamgeo.build_hamiltonian(spec)


@pytest.fixture(scope="module")
def pts(ham):
    return syscore.sample_points(ham[0], count=100, seed=42)


def test_eta_validation():
    h = parse_expr("u1*u2", NAMES[:2])
    with pytest.raises(InvalidEtaError):
        hamgeo.HamiltonianSpec(h, ((1, 2), (3, 1)), NAMES[:2])
    with pytest.raises(InvalidEtaError):
        hamgeo.HamiltonianSpec(h, ((1, 1), (1, 1)), NAMES[:2])


def test_intro_reconstruction(intro, ham, pts):
    hsys, laws = ham
    assert len(laws) == 5
    np.testing.assert_allclose(hsys.evaluate(pts)[1], intro.evaluate(pts)[1], atol=1e-15)
    b, c = intro.law("sigma4").density, intro.law("sigma5").density
    got = evaluate_many([hsys.law("quadratic").density, hsys.law("hlaw").density, b, c], pts)
    np.testing.assert_allclose(got[:, 0], got[:, 2], atol=1e-15)
    np.testing.assert_allclose(got[:, 1], got[:, 3] / 2, atol=1e-15)


def test_hlaw_flux_doubles_to_b2_minus_ac(intro, ham, pts):
    v = evaluate_many([ham[0].law("hlaw").flux, intro.law("sigma5").flux], pts)
    assert np.max(np.abs(2 * v[:, 0] - v[:, 1])) <= 1e-9


def test_all_laws_pass(ham, pts):
    for law in ham[1]:
        assert syscore.check_law(ham[0], law, pts)["max_residual"] <= 1e-9, law.name


def test_quadratic_h_gives_linear_system():
    h = parse_expr("(u1^2 + 2*u2^2 - u3^2)/2", NAMES)
    eye = tuple(tuple(Fraction(int(i == j)) for j in range(3)) for i in range(3))
    hsys, laws = hamgeo.build_hamiltonian(hamgeo.HamiltonianSpec(h, eye, NAMES))
    pts = syscore.sample_points(hsys, count=20)
    assert all(g.is_const for f in hsys.fluxes for g in gradient(f, 3))
    for law in laws:
        assert syscore.check_law(hsys, law, pts)["max_residual"] <= 1e-12


def test_diagonal_eta_laws_match_display():
    # eta = diag(eps): quadratic density sum eps_i u_i^2 / 2, h-law flux sum eps_i h_i^2 / 2
    h = parse_expr("u1*u2*u3 + u1^3", NAMES)
    eps = (1, -1, 1)
    eta = tuple(tuple(Fraction(eps[i] if i == j else 0) for j in range(3)) for i in range(3))
    hsys, _ = hamgeo.build_hamiltonian(hamgeo.HamiltonianSpec(h, eta, NAMES))
    quad = parse_expr("(u1^2 - u2^2 + u3^2)/2", NAMES)
    hflux = parse_expr("((u2*u3 + 3*u1^2)^2 - (u1*u3)^2 + (u1*u2)^2)/2", NAMES)
    qflux = parse_expr("u1*(u2*u3 + 3*u1^2) + u2*(u1*u3) + u3*(u1*u2) - (u1*u2*u3 + u1^3)", NAMES)
    pts = np.random.default_rng(0).uniform(-2, 2, (30, 3))
    got = evaluate_many([hsys.law("quadratic").density, quad, hsys.law("hlaw").flux, hflux,
                         hsys.law("quadratic").flux, qflux], pts)
    np.testing.assert_allclose(got[:, 0], got[:, 1], rtol=1e-15)
    np.testing.assert_allclose(got[:, 2], got[:, 3], rtol=1e-14)
    np.testing.assert_allclose(got[:, 4], got[:, 5], rtol=1e-14, atol=1e-13)


# ------------------------------------------------------------- quadric

def test_quadric_at_123(spec, ham):
    hsys = ham[0]
    pair = hamgeo.default_pair(hsys)
    _, U, F, _, _, vals, _ = _pair_values(hsys, pair, [[1.0, 2.0, 3.0]])
    p, r = _p_r(U, F, vals, 0)
    inv = spec.eta_inv_array()
    assert U[0] @ inv @ U[0] == pytest.approx(-11.0)
    for x, y in ((p, p), (r, r), (p, r)):
        assert abs(hamgeo.quadric_form(inv, x, y)) <= 1e-12


def test_quadric_membership(spec, ham, pts):
    rep = hamgeo.quadric_membership(ham[0], hamgeo.default_pair(ham[0]), spec.eta_array(), pts)
    assert rep["pass"] and rep["max_residual"] <= 1e-9


def test_non_hamiltonian_pair_leaves_quadric(spec, ham, intro, pts):
    pair = LawPair(ham[0].law("quadratic"), intro.law("sigma5"))
    assert hamgeo.quadric_membership(ham[0], pair, spec.eta_array(), pts)["max_residual"] > 1e-3


def test_quadric_swap_symmetry(spec, ham, pts):
    hsys = ham[0]
    _, U, F, _, _, vals, _ = _pair_values(hsys, hamgeo.default_pair(hsys), pts[:10])
    inv = spec.eta_inv_array()
    n = 3
    perm = [n + 1, 1, 2, 3, 0, n + 3, n + 2]
    for k in range(10):
        p, r = _p_r(U, F, vals, k)
        a = hamgeo.quadric_form(inv, p + 0.3 * r, r - 0.7 * p)
        b = hamgeo.quadric_form(inv, (r - 0.7 * p)[perm], (p + 0.3 * r)[perm])
        assert abs(a - b) <= 1e-12


# ------------------------------------------------------------ Legendre

def test_legendre_coordinate_directions(spec, ham, pts):
    rep = hamgeo.legendre_check(ham[0], hamgeo.default_pair(ham[0]), spec.eta_array(), pts)
    assert rep["max_residual"] <= 1e-12


def test_legendre_random_directions(spec, ham, pts):
    dirs = np.random.default_rng(8).standard_normal((5, 3))
    vals = hamgeo.legendre_pairing(ham[0], hamgeo.default_pair(ham[0]), spec.eta_array(), pts, dirs)
    assert np.abs(vals).max() <= 1e-9


def test_off_surface_line_pairs_nonzero(spec, ham, pts):
    hsys = ham[0]
    k = lambda u: np.array([1.0, -2.0, 0.5])
    dirs = np.eye(3)
    vals = hamgeo.legendre_pairing(hsys, hamgeo.default_pair(hsys), spec.eta_array(), pts[:5], dirs, k_field=k)
    grad_h = compile_program(gradient(hsys.law("hlaw").density, 3))(pts[:5])
    np.testing.assert_allclose(vals, k(None)[None, :] - grad_h, atol=1e-12)
    assert np.abs(vals).max() > 0.1


def test_zero_direction(spec, ham, pts):
    vals = hamgeo.legendre_pairing(ham[0], hamgeo.default_pair(ham[0]), spec.eta_array(), pts[:3],
                                   np.zeros((1, 3)))
    assert np.all(vals == 0)


# ---------------------------------------------------------- autoduality

def test_autoduality(spec, ham, pts):
    rep = hamgeo.autoduality_check(ham[0], hamgeo.default_pair(ham[0]), spec.eta_array(), pts)
    assert rep["pass"] and rep["max_residual"] <= 1e-8


def test_cubic_hamiltonian_suite():
    sys = syscore.from_source(corpus.read("hamiltonian_cubic"))
    spec = hamgeo.HamiltonianSpec.from_system(sys)
    hsys, _ = hamgeo.build_hamiltonian(spec)
    out = hamgeo.hamiltonian_suite(spec, syscore.sample_points(hsys, count=50))
    assert out["quadric"]["pass"] and out["legendre"]["pass"] and out["autoduality"]["pass"]


def test_non_hamiltonian_system_not_autodual(spec, finite_frame):
    pts = syscore.sample_points(finite_frame, count=30)
    rep = hamgeo.autoduality_check(finite_frame, LawPair.from_system(finite_frame), spec.eta_array(), pts)
    assert rep["max_residual"] > 1e-3


def test_perturbing_hlaw_flux_breaks_quadric_and_autoduality(spec, ham, pts):
    hsys = ham[0]
    hl = hsys.law("hlaw")
    bent = LawPair(hsys.law("quadratic"), ConservationLaw(hl.density, add(hl.flux, var(0)), "bent"))
    eta = spec.eta_array()
    assert hamgeo.quadric_membership(hsys, bent, eta, pts)["max_residual"] > 1e-3
    assert hamgeo.autoduality_check(hsys, bent, eta, pts)["max_residual"] > 1e-3
    # the flux slot does not enter (r, dp): the pairing is unchanged
    assert hamgeo.legendre_check(hsys, bent, eta, pts)["pass"]


def test_perturbing_hlaw_density_breaks_legendre(spec, ham, pts):
    hsys = ham[0]
    hl = hsys.law("hlaw")
    bent = LawPair(hsys.law("quadratic"), ConservationLaw(add(hl.density, var(0)), hl.flux, "bent"))
    assert hamgeo.legendre_check(hsys, bent, spec.eta_array(), pts)["max_residual"] > 1e-3
