"""Ruled hypersurfaces of systems with two additional laws, and their duals.

Homogeneous coordinates in P^{n+3} are ordered ``(Y0, Y1..Yn, Y{n+1}, Y{n+2}, Y{n+3})``.
A system with laws ``(B|A)``, ``(N|M)`` gives at each ``u`` the generator
line through ``p = [1 : U : B : N : 0]`` and ``r = [0 : F : A : M : 1]``.
"""
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import numkit
from .errors import (DegenerateHypersurfaceError, DegenerateInputError, DualUndefinedError,
                     SingularDensityJacobianError)
from .exprlang import ZERO, add, compile_program, const, div, dot, gradient, mul, neg, sub
from .exprlang.nodes import CONST
from .exprlang.rational import rational_inverse
from .reports import make_report, write_csv
from .syscore import (COND_LIMIT, ConservationLaw, ParametricSystem, characteristic_fields,
                      check_law, law_gradients, sample_points, structure_coefficients)

INCIDENCE_TOL = 1e-9
TANGENT_TOL = 1e-8
HYPERPLANE_TOL = 1e-8
BIDUAL_TOL = 1e-7
SHARED_TOL = 1e-6
_LINE_PARAMS = (0.0, 1.0, -1.0, 0.5, 2.0, -3.0)


@dataclass(frozen=True)
class LawPair:
    """The two additional laws ``(B|A)`` and ``(N|M)`` of a system."""

    first: ConservationLaw
    second: ConservationLaw

    @classmethod
    def from_system(cls, sys, names=None):
        if names is None:
            if len(sys.laws) < 2:
                raise ValueError("system carries fewer than two additional laws")
            return cls(sys.laws[0], sys.laws[1])
        return cls(sys.law(names[0]), sys.law(names[1]))

    def swapped(self):
        return LawPair(self.second, self.first)

    def exprs(self):
        return (self.first.density, self.first.flux, self.second.density, self.second.flux)


# ----------------------------------------------------------------- generators

def _pair_values(sys, pair, points):
    """Per point: U, F, dU, dF and (B, A, N, M) with gradients."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    U, F, dU, dF = sys.evaluate(pts)
    B, A, dB, dA = law_gradients(pair.first, sys.n, pts)
    N, M, dN, dM = law_gradients(pair.second, sys.n, pts)
    return pts, U, F, dU, dF, (B, A, N, M), (dB, dA, dN, dM)


def _p_r(U, F, vals, k):
    B, A, N, M = (v[k] for v in vals)
    p = np.concatenate([[1.0], U[k], [B, N, 0.0]])
    r = np.concatenate([[0.0], F[k], [A, M, 1.0]])
    return p, r


def generator_points(sys, pair, u):
    """``(p, r)`` spanning the generator line at ``u`` (raw homogeneous coordinates)."""
    _, U, F, _, _, vals, _ = _pair_values(sys, pair, u)
    return _p_r(U, F, vals, 0)


def _tangent_frames(dU, dF, grads, k):
    dB, dA, dN, dM = (g[k] for g in grads)
    n = dU.shape[1]
    dp = np.zeros((n, n + 4))
    dr = np.zeros((n, n + 4))
    dp[:, 1:n + 1] = dU[k].T
    dp[:, n + 1] = dB
    dp[:, n + 2] = dN
    dr[:, 1:n + 1] = dF[k].T
    dr[:, n + 1] = dA
    dr[:, n + 2] = dM
    return dp, dr


def tangent_stability(sys, pair, points, tol=TANGENT_TOL):
    """Rank of the tangent frame along each generator and its stability.

    The frame is ``[p; r; d_i (p + t r)]`` at the first non-focal point of
    the line (``t = 0`` unless ``p`` is itself focal, as happens for an
    infinite speed).  Stability means every ``d_i p`` and ``d_i r`` lies in
    that span.  Nondegeneracy of the hypersurface (independence of the two
    laws from the canonical ones and the constants) is tested on the span of
    all sampled ``p`` and ``r``, which must be the whole of R^{n+4}.
    """
    pts, U, F, dU, dF, vals, grads = _pair_values(sys, pair, points)
    n = sys.n
    per_point = []
    worst = 0.0
    span = []
    for k in range(len(pts)):
        p, r = _p_r(U, F, vals, k)
        dp, dr = _tangent_frames(dU, dF, grads, k)
        for t in _LINE_PARAMS:
            frame = np.vstack([p, r, dp + t * dr])
            rk = numkit.rank(frame, 1e-10)
            if rk == n + 2:
                break
        if rk < n + 2:
            raise DegenerateHypersurfaceError(f"tangent frame has rank {rk} < {n + 2} at point {k}")
        res = [numkit.in_span_residual(frame, v) for v in (*dr, *dp)]
        worst = max(worst, max(res))
        span += [p, r]
        per_point.append({"index": k, "rank": rk, "line_parameter": t, "projection_residuals": res[:n]})
    span_rank = numkit.rank(np.array(span), 1e-9)
    if span_rank < n + 4:
        raise DegenerateHypersurfaceError(
            f"generators span only a rank-{span_rank} subspace; the laws are not independent")
    return make_report("tangent_stability", pts, per_point, worst, worst <= tol,
                       rank=n + 2, span_rank=span_rank, nondegenerate=True, tol=tol)


# ---------------------------------------------------------------- focal points

def _focal_from(U, F, vals, k, fields):
    p, r = _p_r(U, F, vals, k)
    return [s.b * r - s.a * p for s in fields.speeds]


def focal_points(sys, pair, u):
    """One point per family: ``b r - a p`` for the projective speed ``[a:b]``."""
    pts, U, F, _, _, vals, _ = _pair_values(sys, pair, u)
    fields = characteristic_fields(sys, pts[0])
    return [numkit.normalize_projective(y) for y in _focal_from(U, F, vals, 0, fields)]


def focal_samples(sys, pair, points):
    """Array ``(n_families, m, n+4)`` of focal points over the sample."""
    pts, U, F, _, _, vals, _ = _pair_values(sys, pair, points)
    out = []
    for k in range(len(pts)):
        fields = characteristic_fields(sys, pts[k])
        out.append([numkit.normalize_projective(y) for y in _focal_from(U, F, vals, k, fields)])
    return np.transpose(np.array(out), (1, 0, 2))


def focal_hyperplane(sys, pair, family, points, tol=HYPERPLANE_TOL):
    pts = np.atleast_2d(points)
    if len(pts) < sys.n + 5:
        raise DegenerateInputError(f"need at least {sys.n + 5} sample points, got {len(pts)}")
    samples = focal_samples(sys, pair, pts)[family]
    coeffs, res = numkit.fit_hyperplane(samples)
    return coeffs, res, res <= tol


def focal_report(sys, pair, points, tol=HYPERPLANE_TOL):
    pts = np.atleast_2d(points)
    if len(pts) < sys.n + 5:
        raise DegenerateInputError(f"need at least {sys.n + 5} sample points, got {len(pts)}")
    fam = focal_samples(sys, pair, pts)
    per_family = []
    for a in range(sys.n):
        c, res = numkit.fit_hyperplane(fam[a])
        sv = numkit.singular_values(fam[a] / np.linalg.norm(fam[a], axis=1, keepdims=True))
        per_family.append({"family": a, "coefficients": c, "residual": res, "pass": res <= tol,
                           "smallest_singular_value": float(sv[-1])})
    worst = max(f["residual"] for f in per_family)
    return make_report("focal_hyperplane", pts, per_family, worst, worst <= tol, tol=tol)


# ------------------------------------------------------------------- duality

def _sym_det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return sub(mul(m[0][0], m[1][1]), mul(m[0][1], m[1][0]))
    out = ZERO
    for j in range(n):
        if m[0][j] is ZERO:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = mul(m[0][j], _sym_det(minor))
        out = add(out, term) if j % 2 == 0 else sub(out, term)
    return out


def density_gradient(sys, expr):
    """Symbolic ``d expr / dU = grad_u(expr) . (grad_u U)^-1`` as n expressions."""
    n = sys.n
    g = gradient(expr, n)
    if sys.is_primal:
        return g
    J = [gradient(d, n) for d in sys.densities]          # J[i][j] = dU^i/du_j
    if all(e.op == CONST for row in J for e in row):
        inv = rational_inverse([[e.value for e in row] for row in J])
        if inv is None:
            raise SingularDensityJacobianError("constant density Jacobian is singular")
        return tuple(dot([inv[i][j] for i in range(n)], g) for j in range(n))
    det = _sym_det(J)
    out = []
    for j in range(n):
        # column j of the adjugate: adj[i][j] = (-1)^(i+j) det(J without row j, column i)
        terms = []
        for i in range(n):
            minor = [row[:i] + row[i + 1:] for r, row in enumerate(J) if r != j]
            cof = _sym_det(minor) if minor else const(1)
            terms.append(cof if (i + j) % 2 == 0 else neg(cof))
        out.append(div(dot(terms, g), det))
    return tuple(out)


def _numeric_density_gradients(dU, grads):
    if np.linalg.cond(dU) > COND_LIMIT:
        raise SingularDensityJacobianError("density Jacobian is singular")
    return [np.linalg.solve(dU.T, g) for g in grads]


def dual_generators(sys, pair, u):
    """``(p~, r~)`` in dual coordinates Z, hyperplanes tangent along the generator."""
    _, U, F, dU, _, vals, grads = _pair_values(sys, pair, u)
    return _dual_pair(U[0], F[0], dU[0], [v[0] for v in vals], [g[0] for g in grads])


def _dual_pair(U, F, dU, vals, grads):
    B, A, N, M = vals
    gB, gN = _numeric_density_gradients(dU, (grads[0], grads[2]))
    pt = np.concatenate([[U @ gB - B], -gB, [1.0, 0.0, F @ gB - A]])
    rt = np.concatenate([[U @ gN - N], -gN, [0.0, 1.0, F @ gN - M]])
    return pt, rt


def dual_to_primal_slots(z):
    """Read dual coordinates Z as primal coordinates Y (fixed slot permutation)."""
    z = np.asarray(z, dtype=float)
    n = len(z) - 4
    return np.concatenate([[z[n + 1]], z[1:n + 1], [z[0], z[n + 3], z[n + 2]]])


def incidence_report(sys, pair, points, tol=INCIDENCE_TOL):
    pts, U, F, dU, dF, vals, grads = _pair_values(sys, pair, points)
    per_point = []
    worst = 0.0
    for k in range(len(pts)):
        p, r = _p_r(U, F, vals, k)
        dp, _ = _tangent_frames(dU, dF, grads, k)
        pt, rt = _dual_pair(U[k], F[k], dU[k], [v[k] for v in vals], [g[k] for g in grads])
        frame = np.vstack([p, r, dp])
        res = 0.0
        for z in (pt, rt):
            for y in frame:
                res = max(res, abs(z @ y) / (np.linalg.norm(z) * np.linalg.norm(y)))
        worst = max(worst, res)
        per_point.append({"index": k, "incidence": res})
    return make_report("dual_incidence", pts, per_point, worst, worst <= tol, tol=tol)


def dual_system(sys, pair, points=None, swap=False):
    """The system whose ruled hypersurface is dual to that of ``(sys, pair)``.

    Densities are ``-dB/dU`` and fluxes ``-dN/dU``; the dual pair is
    ``(U.dB - B | U.dN - N)`` and ``(F.dB - A | F.dN - M)`` with ``d = d/dU``.
    """
    if swap:
        pair = pair.swapped()
    if points is None:
        points = sample_points(sys, count=8, seed=7)
    if not sys.is_primal:
        _, _, dU, _ = sys.evaluate(points, strict=False)
        if any(not np.all(np.isfinite(J)) or np.linalg.cond(J) > COND_LIMIT for J in dU):
            raise DualUndefinedError("the density Jacobian is singular (an infinite characteristic speed); "
                                     "d/dU is undefined, transform to a finite-speed frame first")
    gB = density_gradient(sys, pair.first.density)
    gN = density_gradient(sys, pair.second.density)
    U, F = sys.densities, sys.fluxes
    (B, A), (N, M) = (pair.first.density, pair.first.flux), (pair.second.density, pair.second.flux)
    dens = tuple(neg(g) for g in gB)
    flux = tuple(neg(g) for g in gN)
    first = ConservationLaw(sub(dot(U, gB), B), sub(dot(U, gN), N), "dual_b")
    second = ConservationLaw(sub(dot(F, gB), A), sub(dot(F, gN), M), "dual_n")
    provenance = "dual"
    dual = ParametricSystem(sys.var_names, dens, flux, (first, second), provenance,
                            f"{sys.name}_dual", sys.domain)
    n = sys.n
    hess = compile_program(tuple(e for d in dens for e in gradient(d, n)))
    for J in hess(points, strict=False).reshape(len(points), n, n):
        if not np.all(np.isfinite(J)) or numkit.rank(J, 1e-9) < n:
            raise DualUndefinedError("the density Hessian of B is singular; the dual is undefined")
    return dual, LawPair(first, second)


def biduality_check(sys, pair, points, tol=BIDUAL_TOL, dual=None):
    """Dualize once symbolically, then take the dual generators of the dual
    numerically and compare their line with the original generator line."""
    pts = np.atleast_2d(points)
    if dual is None:
        dual = dual_system(sys, pair, pts[:8])
    dsys, dpair = dual
    _, U, F, _, _, vals, _ = _pair_values(sys, pair, pts)
    per_point = []
    worst = 0.0
    for k, u in enumerate(pts):
        p, r = _p_r(U, F, vals, k)
        zt, wt = dual_generators(dsys, dpair, u)
        line = np.vstack([dual_to_primal_slots(zt), dual_to_primal_slots(wt)])
        ang = float(numkit.principal_angles(np.vstack([p, r]), line).max())
        worst = max(worst, ang)
        per_point.append({"index": k, "max_principal_angle": ang})
    return make_report("biduality", pts, per_point, worst, worst <= tol, tol=tol)


def match_families(f1, f2):
    """Permutation ``perm`` with ``f2`` family ``perm[a]`` closest to ``f1`` family ``a``."""
    n = f1.n
    ang = np.array([[numkit.vector_angle(f1.xi(a), f2.xi(b)) for b in range(n)] for a in range(n)])
    best = min(permutations(range(n)), key=lambda p: max(ang[a, p[a]] for a in range(n)))
    return best, [float(ang[a, best[a]]) for a in range(n)]


def shared_char_fields_check(sys, pair, points, tol=SHARED_TOL, dual=None):
    pts = np.atleast_2d(points)
    if dual is None:
        dual = dual_system(sys, pair, pts[:8])
    dsys = dual[0]
    per_point = []
    worst = 0.0
    for k, u in enumerate(pts):
        perm, angles = match_families(characteristic_fields(sys, u), characteristic_fields(dsys, u))
        worst = max(worst, max(angles))
        per_point.append({"index": k, "permutation": list(perm), "angles": angles})
    return make_report("shared_characteristic_fields", pts, per_point, worst, worst <= tol, tol=tol)


def structure_agreement(sys, dsys, points, tol=1e-4):
    """Compare structure coefficients of two systems with shared characteristic fields."""
    pts = np.atleast_2d(points)
    per_point = []
    worst = 0.0
    for k, u in enumerate(pts):
        perm, _ = match_families(characteristic_fields(sys, u), characteristic_fields(dsys, u))
        c1 = structure_coefficients(sys, u).c
        c2 = structure_coefficients(dsys, u).c
        p = list(perm)
        c2 = c2[np.ix_(p, p, p)]
        diff = float(np.abs(c1 - c2).max())
        worst = max(worst, diff)
        per_point.append({"index": k, "max_difference": diff})
    return make_report("structure_agreement", pts, per_point, worst, worst <= tol, tol=tol)


def dual_laws_report(sys, pair, points, dual=None):
    dsys, dpair = dual if dual is not None else dual_system(sys, pair)
    reps = [check_law(dsys, law, points) for law in dsys.canonical_laws() + (dpair.first, dpair.second)]
    worst = max(r["max_residual"] for r in reps)
    return make_report("dual_laws", points, [{"law": r["law"], "max_residual": r["max_residual"],
                                              "pass": r["pass"]} for r in reps],
                       worst, all(r["pass"] for r in reps))


# ---------------------------------------------------------------- CSV dumps

def write_generator_csv(path, sys, pair, points):
    pts, U, F, _, _, vals, _ = _pair_values(sys, pair, points)
    n = sys.n
    header = ["index", "kind"] + [f"u{i + 1}" for i in range(n)] + [f"Y{j}" for j in range(n + 4)]
    rows = []
    for k in range(len(pts)):
        p, r = _p_r(U, F, vals, k)
        rows.append([k, "p", *pts[k], *p])
        rows.append([k, "r", *pts[k], *r])
    fam = focal_samples(sys, pair, pts)
    for a in range(n):
        for k in range(len(pts)):
            rows.append([k, f"focal{a + 1}", *pts[k], *fam[a, k]])
    write_csv(path, header, rows)
