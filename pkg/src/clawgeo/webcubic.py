"""Abelian relations of 3-webs and the cubic hypersurface in P^4.

A 3-component system with constant speeds ``inf, 0, -1`` turns each law
``(B|A)`` into first integrals ``I1 = B``, ``I2 = A``, ``I3 = -A - B`` of the
three characteristic foliations with ``dI1 + dI2 + dI3 = 0``.  Five
independent laws give, at every point, three points ``P, Q, R`` of P^4 that
all lie on one cubic hypersurface.
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations
from math import factorial

import numpy as np

from . import _kernels, numkit
from .errors import CanonicalSpeedError, CoincidentPointsError, DegenerateInputError, DependentLawsError
from .exprlang import add, gradient, neg
from .reports import make_report
from .syscore import _fields_many, characteristic_fields, check_law, law_gradients

CANONICAL_SPEEDS = (numkit.ProjectiveValue(1.0, 0.0), numkit.ProjectiveValue(0.0, 1.0),
                    numkit.ProjectiveValue(1.0, -1.0))
FIT_TOL = 1e-8
LINE_TOL = 1e-8


def grlex_exponents(nvars=5, degree=3):
    """Exponent vectors of degree-``degree`` monomials, graded lexicographic order."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    out.sort(reverse=True)
    return np.array(out, dtype=np.int64)


EXPONENTS = grlex_exponents()


@dataclass(frozen=True)
class AbelianBasis:
    system: object
    laws: tuple
    triples: tuple      # (I1, I2, I3) expressions per law

    def gradients(self, u):
        """Arrays ``(3, 5, n)``: gradient of ``I_k`` for each basis element."""
        n = self.system.n
        out = np.zeros((3, len(self.laws), n))
        for j, law in enumerate(self.laws):
            _, _, dB, dA = law_gradients(law, n, np.atleast_2d(u))
            out[0, j], out[1, j], out[2, j] = dB[0], dA[0], -dA[0] - dB[0]
        return out


def check_canonical_speeds(sys, points, tol=1e-8):
    for k, f in enumerate(_fields_many(sys, np.atleast_2d(points))):
        for got, want in zip(f.speeds, CANONICAL_SPEEDS):
            if got.distance(want) > tol:
                raise CanonicalSpeedError(
                    f"speeds at sample {k} are {[str(s) for s in f.speeds]}, expected [1:0], [0:1], [-1:1]")


def abelian_from_laws(sys, laws, points, tol=1e-8):
    """Pick the independent nontrivial laws and split each into (I1, I2, I3)."""
    if sys.n != 3:
        raise CanonicalSpeedError("3-webs need a 3-component system")
    points = np.atleast_2d(points)
    check_canonical_speeds(sys, points, tol)
    chosen, stack = [], []
    for law in laws:
        _, _, dB, dA = law_gradients(law, 3, points)
        g = np.hstack([dB, dA]).ravel()
        if np.max(np.abs(g)) < 1e-12:
            continue
        if numkit.rank(np.vstack(stack + [g]), 1e-8) == len(stack) + 1:
            rep = check_law(sys, law, points)
            if not rep["pass"]:
                raise DependentLawsError(f"{law.name!r} is not a conservation law of the system")
            stack.append(g)
            chosen.append(law)
    if len(chosen) < 5:
        raise DependentLawsError(f"only {len(chosen)} independent laws; a rank-5 web needs 5")
    chosen = tuple(chosen[:5])
    triples = tuple((l.density, l.flux, neg(add(l.density, l.flux))) for l in chosen)
    return AbelianBasis(sys, chosen, triples)


def abelian_report(basis, points):
    """Symbolic identity ``dI1 + dI2 + dI3 = 0``, foliation residuals, and rank."""
    points = np.atleast_2d(points)
    n = basis.system.n
    symbolic = all(all(g.is_const and g.value == 0 for g in gradient(add(add(a, b), c), n))
                   for a, b, c in basis.triples)
    per_point = []
    worst = 0.0
    for k, u in enumerate(points):
        f = characteristic_fields(basis.system, u)
        G = basis.gradients(u)
        res = [float(np.abs(G[a] @ f.xi(a)).max() / (1 + np.abs(G[a]).max())) for a in range(3)]
        worst = max(worst, max(res))
        per_point.append({"index": k, "foliation_residuals": res})
    grads = np.array([np.hstack([basis.gradients(u)[0], basis.gradients(u)[1]]) for u in points])
    rank = numkit.rank(np.transpose(grads, (1, 0, 2)).reshape(len(basis.laws), -1), 1e-8)
    return make_report("abelian_basis", points, per_point, worst, worst <= 1e-6 and symbolic and rank == 5,
                       symbolic_identity=symbolic, rank=rank)


def pqr_raw(basis, u):
    """Both defining formulas of P, Q and R at ``u`` (unnormalized)."""
    f = characteristic_fields(basis.system, u)
    G = basis.gradients(u)                      # G[k] is (5, n) for I_{k+1}
    xi = [f.xi(a) for a in range(3)]
    P = (G[2] @ xi[0], -(G[1] @ xi[0]))
    Q = (G[0] @ xi[1], -(G[2] @ xi[1]))
    R = (G[1] @ xi[2], -(G[0] @ xi[2]))
    return P, Q, R


def pqr_points(basis, u, tol=1e-8):
    """Normalized ``P, Q, R`` in P^4 and the worst angle between the two formulas."""
    pts = []
    worst = 0.0
    for a, b in pqr_raw(basis, u):
        if np.linalg.norm(a) < 1e-12 or np.linalg.norm(b) < 1e-12:
            raise DegenerateInputError("P, Q or R vanishes at this point")
        worst = max(worst, numkit.vector_angle(a, b))
        pts.append(numkit.normalize_projective(a))
    return pts[0], pts[1], pts[2], worst


def pqr_report(basis, points, tol=1e-8):
    points = np.atleast_2d(points)
    per_point = []
    worst = 0.0
    min_sv = np.inf
    for k, u in enumerate(points):
        P, Q, R, ang = pqr_points(basis, u)
        sv = numkit.singular_values(np.vstack([P, Q, R]))
        min_sv = min(min_sv, sv[-1] / sv[0])
        worst = max(worst, ang)
        per_point.append({"index": k, "formula_angle": ang, "pqr_rank_ratio": sv[-1] / sv[0]})
    return make_report("pqr_points", points, per_point, worst, worst <= tol and min_sv > 1e-8,
                       min_rank_ratio=float(min_sv), tol=tol)


def pqr_samples(basis, points):
    out = []
    for u in np.atleast_2d(points):
        P, Q, R, _ = pqr_points(basis, u)
        out += [P, Q, R]
    return np.array(out)


# ------------------------------------------------------------------ cubics

def _multinomial(e):
    return factorial(int(sum(e))) // int(np.prod([factorial(int(x)) for x in e]))


def _to_tensor(coeffs):
    T = np.zeros((5, 5, 5))
    for c, e in zip(coeffs, EXPONENTS):
        idx = [i for i in range(5) for _ in range(e[i])]
        m = _multinomial(e)
        for perm in set(permutations(idx)):
            T[perm] = c / m
    return T


def _from_tensor(T):
    out = np.zeros(len(EXPONENTS))
    for k, e in enumerate(EXPONENTS):
        idx = tuple(i for i in range(5) for _ in range(e[i]))
        out[k] = T[idx] * _multinomial(e)
    return out


@dataclass(frozen=True)
class CubicForm:
    """A homogeneous cubic on P^4; coefficients follow :data:`EXPONENTS`."""

    coeffs: np.ndarray

    @classmethod
    def make(cls, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if not np.any(c):
            raise DegenerateInputError("zero cubic")
        return cls(numkit.normalize_projective(c))

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return _kernels.monomial_matrix(pts, EXPONENTS) @ self.coeffs

    def residuals(self, points):
        """``|C(x)| / |x|^3`` per point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.abs(self(pts)) / np.linalg.norm(pts, axis=1) ** 3

    def substitute(self, W):
        """The cubic ``x -> C(W x)``."""
        T = np.einsum("abc,ai,bj,ck->ijk", _to_tensor(self.coeffs), W, W, W)
        return CubicForm.make(_from_tensor(T))

    def as_dict(self):
        return {"monomials": [list(map(int, e)) for e in EXPONENTS], "coefficients": self.coeffs}


@dataclass(frozen=True)
class CubicFit:
    cubic: object          # CubicForm or None when nullity is 0
    residual: float
    nullity: int
    singular_values: np.ndarray

    @property
    def found(self):
        return self.nullity >= 1

    @property
    def degenerate(self):
        return self.nullity > 1


def fit_cubic(samples, tol=FIT_TOL):
    """Null direction of the monomial matrix of the samples.

    Samples are first whitened (``y = Sigma^-1 V^T x`` from the SVD of the
    sample matrix) so that the monomial matrix is well scaled; the cubic is
    mapped back to the original coordinates afterwards.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if X.shape[1] != 5:
        raise ValueError("samples must be points of P^4 (5 coordinates)")
    if len(X) < 35:
        raise DegenerateInputError(f"need at least 35 samples, got {len(X)}")
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    if s[-1] < 1e-12 * s[0]:
        raise DegenerateInputError("samples lie in a hyperplane")
    W = (vt.T / s).T                       # y = W x
    Y = X @ W.T
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    Mon = _kernels.monomial_matrix(Y, EXPONENTS)
    _, sv, vt2 = np.linalg.svd(Mon, full_matrices=True)
    sv_full = np.concatenate([sv, np.zeros(len(EXPONENTS) - len(sv))])
    nullity = int(np.sum(sv_full <= tol * sv_full[0]))
    if nullity == 0:
        return CubicFit(None, float("inf"), 0, sv_full)
    cubic = CubicForm.make(vt2[-1]).substitute(W)
    return CubicFit(cubic, float(cubic.residuals(X).max()), nullity, sv_full)


def line_on_cubic(cubic, X, Y):
    """Max of ``|C(sX + tY)|`` over four points of the line (unit X, Y)."""
    x = np.asarray(X, dtype=float)
    y = np.asarray(Y, dtype=float)
    x = x / np.linalg.norm(x)
    y = y / np.linalg.norm(y)
    if numkit.vector_angle(x, y) < 1e-10:
        raise CoincidentPointsError("the two points coincide projectively")
    line = np.array([x, y, x + y, x - y])
    return float(cubic.residuals(line).max())


def web_cubic_suite(sys, laws, fit_points, holdout_points, seed=42):
    """Abelian basis, P/Q/R, pooled cubic fit, line checks and the random control."""
    basis = abelian_from_laws(sys, laws, fit_points)
    ab = abelian_report(basis, fit_points)
    pqr = pqr_report(basis, fit_points)
    fit = fit_cubic(pqr_samples(basis, fit_points))
    held = pqr_samples(basis, holdout_points)
    held_res = float(fit.cubic.residuals(held).max()) if fit.found else float("inf")
    line_worst = 0.0
    if fit.found:
        for u in np.atleast_2d(holdout_points):
            P, Q, R, _ = pqr_points(basis, u)
            line_worst = max(line_worst, line_on_cubic(fit.cubic, P, Q),
                             line_on_cubic(fit.cubic, Q, R), line_on_cubic(fit.cubic, R, P))
    rng = np.random.default_rng(seed)
    random_fit = fit_cubic(rng.standard_normal((60, 5)))
    per_family = []
    samples = pqr_samples(basis, fit_points)
    for a, label in enumerate("PQR"):
        sub = fit_cubic(samples[a::3]) if len(samples[a::3]) >= 35 else None
        per_family.append({"family": label, "nullity": None if sub is None else sub.nullity})
    passed = (ab["pass"] and pqr["pass"] and fit.found and fit.residual <= FIT_TOL
              and held_res <= 1e-7 and line_worst <= LINE_TOL and random_fit.nullity == 0)
    return {
        "check": "web_cubic",
        "abelian": ab,
        "pqr": pqr,
        "cubic": fit.cubic.as_dict() if fit.found else None,
        "nullity": fit.nullity,
        "fit_residual": fit.residual,
        "holdout_residual": held_res,
        "line_residual": line_worst,
        "random_nullity": random_fit.nullity,
        "per_family_nullity": per_family,
        "pass": passed,
    }
