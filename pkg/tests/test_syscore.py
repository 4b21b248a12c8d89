import numpy as np
import pytest

from clawgeo import corpus, numkit, syscore
from clawgeo.errors import DependentDensitiesError, NotStrictlyHyperbolicError
from clawgeo.exprlang import add, const, mul, var
from clawgeo.syscore import ConservationLaw

U123 = np.array([1.0, 2.0, 3.0])


def abc_laws(sys):
    c = sys.canonical_laws()
    total = ConservationLaw(add(add(c[0].density, c[1].density), c[2].density),
                            add(add(c[0].flux, c[1].flux), c[2].flux), "a")
    return [total, sys.law("sigma4"), sys.law("sigma5")]


# ------------------------------------------------------------- fields

def test_intro_fields_at_123(intro):
    f = syscore.characteristic_fields(intro, U123)
    np.testing.assert_allclose(f.finite_speeds(), [-1, -2, -3], atol=1e-12)
    for a, want in enumerate([(0, -1, 2), (-1, 0, -1), (2, -1, 0)]):
        assert numkit.vector_angle(f.xi(a), want) <= 1e-8
    np.testing.assert_allclose(f.left @ f.right, np.eye(3), atol=1e-12)


def test_linear_system_fields():
    sys = syscore.from_source(corpus.read("linear_diagonal"))
    f = syscore.characteristic_fields(sys, [1.0, 1.1, 0.7])
    np.testing.assert_allclose(f.finite_speeds(), [3, 2, 1])
    np.testing.assert_allclose(np.abs(f.right), np.eye(3), atol=1e-15)


def test_speed_collision_on_diagonal(intro):
    with pytest.raises(NotStrictlyHyperbolicError):
        syscore.characteristic_fields(intro, [1.2, 1.2, 1.5])


def test_sampling_is_seeded_and_avoids_diagonals(intro):
    a = syscore.sample_points(intro, count=30, seed=42)
    b = syscore.sample_points(intro, count=30, seed=42)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.6 and a.max() <= 1.7
    for u in a:
        assert syscore.min_speed_gap(syscore.characteristic_fields(intro, u)) > 1e-6


# ---------------------------------------------------------------- laws

def test_sigma4_passes(intro, intro_points):
    assert syscore.check_law(intro, intro.law("sigma4"), intro_points)["pass"]


def test_canonical_laws_exact(intro, intro_points):
    for law in intro.canonical_laws():
        assert syscore.check_law(intro, law, intro_points)["max_residual"] <= 1e-14


def test_bad_law_fails(intro, intro_points):
    rep = syscore.check_law(intro, ConservationLaw(var(0), const(0), "bad"), intro_points)
    assert not rep["pass"] and rep["max_residual"] > 0.1


def test_both_residuals_agree(intro, intro_points):
    good = syscore.check_law(intro, intro.law("sigma5"), intro_points)
    assert good["chain_rule_max"] <= 1e-9 and good["family_max"] <= 1e-9
    bent = ConservationLaw(intro.law("sigma5").density, add(intro.law("sigma5").flux, var(0)), "bent")
    bad = syscore.check_law(intro, bent, intro_points)
    for p in bad["per_point"]:
        assert (p["chain_rule"] <= 1e-9) == (max(p["families"]) <= 1e-9)


# ---------------------------------------------------------- reciprocal

def test_identity_transform(intro, intro_points):
    n = len(intro.law_basis())
    rx, rt = [0] * n, [0] * n
    rx[n - 2], rt[n - 1] = 1, 1
    new, _ = syscore.reciprocal_transform(intro, rx, rt)
    U, F, _, _ = new.evaluate(intro_points)
    np.testing.assert_allclose(U, intro_points, atol=1e-14)
    np.testing.assert_allclose(F, intro.evaluate(intro_points)[1], atol=1e-14)


def test_intro_transform_constant_speeds(web_system, web_points):
    want = [numkit.ProjectiveValue(1.0, 0.0), numkit.ProjectiveValue(0.0, 1.0),
            numkit.ProjectiveValue(1.0, -1.0)]
    for u in web_points:
        f = syscore.characteristic_fields(web_system, u)
        assert max(s.distance(w) for s, w in zip(f.speeds, want)) <= 1e-8
    assert [l.name for l in web_system.laws] == ["dx_r", "dt_r"]


def test_transform_round_trip(intro, web_system, web_points):
    # dx_r and dt_r are the old dx and dt written in the new variables
    names = [l.name for l in web_system.law_basis()]
    rx = [1 if k == names.index("dx_r") else 0 for k in range(len(names))]
    rt = [1 if k == names.index("dt_r") else 0 for k in range(len(names))]
    back, _ = syscore.reciprocal_transform(web_system, rx, rt)
    for u in web_points[:20]:
        f0 = syscore.characteristic_fields(intro, u)
        f1 = syscore.characteristic_fields(back, u)
        assert max(a.distance(b) for a, b in zip(f0.speeds, f1.speeds)) <= 1e-8


def test_transform_preserves_law_count(intro, web_system, web_points):
    before = syscore.law_rank(intro, intro.canonical_laws() + intro.laws, web_points[:8])
    after = syscore.law_rank(web_system, web_system.canonical_laws() + web_system.laws, web_points[:8])
    assert before == after == 5


def test_transformed_laws_valid(web_system, web_points):
    for law in web_system.canonical_laws() + web_system.laws:
        assert syscore.check_law(web_system, law, web_points)["pass"], law.name


def test_derived_spec_reingests(web_system, web_points):
    again = syscore.from_source(syscore.to_source(web_system))
    a = web_system.evaluate(web_points)
    b = again.evaluate(web_points)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-13)
    assert again.provenance == "reciprocal"


# ----------------------------------------------------- degeneracy, Temple

def test_intro_linearly_degenerate(intro, intro_points):
    assert syscore.linear_degeneracy(intro, intro_points)["max_residual"] <= 1e-6


def test_burgers_genuinely_nonlinear():
    sys = syscore.from_source(corpus.read("burgers"))
    rep = syscore.linear_degeneracy(sys, syscore.sample_points(sys, count=20))
    assert rep["max_residual"] == pytest.approx(1.0, rel=1e-8)


def test_linear_system_zero_residuals():
    sys = syscore.from_source(corpus.read("linear_diagonal"))
    pts = syscore.sample_points(sys, count=20)
    assert syscore.linear_degeneracy(sys, pts)["max_residual"] <= 1e-12
    assert syscore.temple_rectilinearity(sys, pts)["max_residual"] <= 1e-12


def test_abc_coordinates_are_rectilinear(intro, intro_points):
    abc = syscore.change_variables(intro, abc_laws(intro), intro_points[:12])
    assert syscore.temple_rectilinearity(abc, intro_points)["max_residual"] <= 1e-5


def test_u_coordinates_temple_value_locked(intro, intro_points):
    rep = syscore.temple_rectilinearity(intro, intro_points)
    np.testing.assert_allclose(rep["per_family"], [5.282847707655575, 9.0561789784534, 7.880658963213179],
                               rtol=1e-5)
    one = syscore.temple_rectilinearity(intro, [U123])
    np.testing.assert_allclose(one["per_family"], [0.35777087643, 0.70710678121, 0.35777087646], rtol=1e-6)


def test_flux_rescaling_invariance(intro, intro_points):
    scaled = syscore.ParametricSystem(intro.var_names, intro.densities,
                                      tuple(mul(const(3), f) for f in intro.fluxes), name="scaled")
    pts = intro_points[:20]
    a = syscore.temple_rectilinearity(intro, pts)["per_family"]
    b = syscore.temple_rectilinearity(scaled, pts)["per_family"]
    np.testing.assert_allclose(a, b, rtol=1e-6)
    # speeds scale with the fluxes, so only the ratios between families are invariant
    ham = syscore.from_source(corpus.read("hamiltonian_cubic"))
    ham2 = syscore.ParametricSystem(ham.var_names, ham.densities, tuple(mul(const(2), f) for f in ham.fluxes))
    p = syscore.sample_points(ham, count=10)
    a = np.array(syscore.linear_degeneracy(ham, p)["per_family"])
    b = np.array(syscore.linear_degeneracy(ham2, p)["per_family"])
    np.testing.assert_allclose(a / a[0], b / b[0], rtol=1e-6)


# --------------------------------------------------- change of variables

def test_change_to_own_densities_is_identity(intro, intro_points):
    same = syscore.change_variables(intro, intro.canonical_laws())
    for x, y in zip(same.evaluate(intro_points[:5]), intro.evaluate(intro_points[:5])):
        np.testing.assert_allclose(x, y)


def test_abc_keeps_speeds_and_fields(intro, intro_points):
    abc = syscore.change_variables(intro, abc_laws(intro))
    for u in intro_points[:20]:
        f0 = syscore.characteristic_fields(intro, u)
        f1 = syscore.characteristic_fields(abc, u)
        np.testing.assert_allclose(f1.finite_speeds(), f0.finite_speeds(),
                                   atol=1e-9)
        for a in range(3):
            assert numkit.vector_angle(f0.xi(a), f1.xi(a)) <= 1e-8


def test_dependent_densities(intro):
    c = intro.canonical_laws()
    with pytest.raises(DependentDensitiesError):
        syscore.change_variables(intro, [c[0], c[0], c[1]])


# --------------------------------------------------- structure coefficients

def test_linear_structure_zero():
    sys = syscore.from_source(corpus.read("linear_diagonal"))
    assert np.abs(syscore.structure_coefficients(sys, [1.0, 1.2, 0.9]).c).max() <= 1e-9


def test_intro_nondiagonalizable(intro):
    sc = syscore.structure_coefficients(intro, U123)
    assert sc.nondiagonalizable == (True, True, True)
    np.testing.assert_allclose(sc.c, -np.transpose(sc.c, (0, 2, 1)), atol=0)
    # regression lock
    np.testing.assert_allclose(sc.c[0, 0, 1:], [-0.459619, -0.357771], atol=1e-5)
    np.testing.assert_allclose(sc.c[1, 0, 1:], [0.223607, 0.565685], atol=1e-5)
