"""Hamiltonian systems ``u_t = (eta grad h)_x`` with a constant symmetric ``eta``.

Such a system has the ``n`` canonical laws plus

* ``(u.eta^-1.u / 2 | u.grad h - h)``  (the quadratic law), and
* ``(h | grad h.eta.grad h / 2)``       (the h-law),

and its generator lines lie on the quadric of the bilinear form

    (X, Y) = X_mid eta^-1 Y_mid - X0 Y{n+1} - X{n+1} Y0 - X{n+2} Y{n+3} - X{n+3} Y{n+2}.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import numkit
from .errors import InvalidEtaError
from .exprlang import HamiltonianDecl, const, dot, gradient, mul, sub, var
from .exprlang.rational import rational_inverse
from .reports import make_report
from .ruledgeo import LawPair, _dual_pair, _p_r, _pair_values, _tangent_frames
from .syscore import ConservationLaw, ParametricSystem, DEFAULT_DOMAIN

QUADRIC_TOL = 1e-9
LEGENDRE_TOL = 1e-9
AUTODUAL_TOL = 1e-8
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class HamiltonianSpec:
    h: object
    eta: tuple                 # rows of Fractions
    var_names: tuple
    name: str = "hamiltonian"
    domain: tuple = DEFAULT_DOMAIN

    def __post_init__(self):
        n = len(self.var_names)
        eta = self.eta
        if len(eta) != n or any(len(r) != n for r in eta):
            raise InvalidEtaError(f"eta must be {n}x{n}")
        if any(eta[i][j] != eta[j][i] for i in range(n) for j in range(n)):
            raise InvalidEtaError("eta is not symmetric")
        if rational_inverse(eta) is None:
            raise InvalidEtaError("eta is singular")

    @property
    def n(self):
        return len(self.var_names)

    @property
    def eta_inv(self):
        return rational_inverse(self.eta)

    def eta_array(self):
        return np.array([[float(x) for x in r] for r in self.eta])

    def eta_inv_array(self):
        return np.array([[float(x) for x in r] for r in self.eta_inv])

    @classmethod
    def from_system(cls, sys):
        if sys.hamiltonian is None:
            raise ValueError(f"system {sys.name!r} has no hamiltonian block")
        return cls(sys.hamiltonian.h, sys.hamiltonian.eta, sys.var_names, sys.name, sys.domain)


def _matvec(rows, exprs):
    return tuple(dot(list(r), exprs) for r in rows)


def canonical_laws(spec):
    """The quadratic law and the h-law (the two beyond the ``n`` canonical ones)."""
    n = spec.n
    u = tuple(var(i) for i in range(n))
    gh = gradient(spec.h, n)
    flux = _matvec(spec.eta, gh)
    quad = ConservationLaw(mul(const(HALF), dot(u, _matvec(spec.eta_inv, u))),
                           sub(dot(u, gh), spec.h), "quadratic")
    hlaw = ConservationLaw(spec.h, mul(const(HALF), dot(gh, flux)), "hlaw")
    return flux, quad, hlaw


def build_hamiltonian(spec):
    """``(system, laws)``: the primal system and its ``n + 2`` canonical laws.

    The system carries ``(quadratic, hlaw)`` as its additional laws, which
    is also the default :class:`LawPair`.
    """
    n = spec.n
    flux, quad, hlaw = canonical_laws(spec)
    sys = ParametricSystem(spec.var_names, tuple(var(i) for i in range(n)), flux, (quad, hlaw),
                           "primal", spec.name, spec.domain, HamiltonianDecl(spec.h, spec.eta))
    return sys, sys.canonical_laws() + (quad, hlaw)


def default_pair(sys):
    return LawPair(sys.law("quadratic"), sys.law("hlaw"))


def quadric_matrix(eta_inv):
    """Gram matrix of the bilinear form on R^{n+4}."""
    eta_inv = np.asarray(eta_inv, dtype=float)
    n = eta_inv.shape[0]
    G = np.zeros((n + 4, n + 4))
    G[1:n + 1, 1:n + 1] = eta_inv
    G[0, n + 1] = G[n + 1, 0] = -1.0
    G[n + 2, n + 3] = G[n + 3, n + 2] = -1.0
    return G


def quadric_form(eta_inv, X, Y):
    return float(np.asarray(X) @ quadric_matrix(eta_inv) @ np.asarray(Y))


def quadric_membership(sys, pair, eta, points, tol=QUADRIC_TOL):
    """``|(p,p)|, |(r,r)|, |(p,r)|`` scaled by ``|X| |Y|`` at each point."""
    G = quadric_matrix(np.linalg.inv(np.asarray(eta, dtype=float)))
    pts, U, F, _, _, vals, _ = _pair_values(sys, pair, points)
    per_point = []
    worst = 0.0
    for k in range(len(pts)):
        p, r = _p_r(U, F, vals, k)
        res = [abs(x @ G @ y) / (np.linalg.norm(x) * np.linalg.norm(y)) for x, y in ((p, p), (r, r), (p, r))]
        worst = max(worst, max(res))
        per_point.append({"index": k, "pp": res[0], "rr": res[1], "pr": res[2]})
    return make_report("quadric_membership", pts, per_point, worst, worst <= tol, tol=tol)


def legendre_pairing(sys, pair, eta, points, directions=None, k_field=None):
    """Values of ``(s, dp(du))`` for each point and direction.

    ``s`` is the point ``r`` of the generator line, or, when ``k_field`` is
    given, ``[0 : eta k : A : M : 1]`` for the covector ``k = k_field(u)``;
    then the pairing equals ``(k - grad N) . du``.
    """
    eta = np.asarray(eta, dtype=float)
    G = quadric_matrix(np.linalg.inv(eta))
    pts, U, F, dU, dF, vals, grads = _pair_values(sys, pair, points)
    n = sys.n
    if directions is None:
        directions = np.eye(n)
    directions = np.atleast_2d(directions)
    out = np.zeros((len(pts), len(directions)))
    for k in range(len(pts)):
        p, r = _p_r(U, F, vals, k)
        if k_field is not None:
            r = r.copy()
            r[1:n + 1] = eta @ np.asarray(k_field(pts[k]), dtype=float)
        dp, _ = _tangent_frames(dU, dF, grads, k)
        for j, du in enumerate(directions):
            out[k, j] = r @ G @ (du @ dp)
    return out


def legendre_check(sys, pair, eta, points, directions=None, tol=LEGENDRE_TOL):
    vals = legendre_pairing(sys, pair, eta, points, directions)
    per_point = [{"index": k, "pairings": list(v)} for k, v in enumerate(vals)]
    worst = float(np.abs(vals).max()) if vals.size else 0.0
    return make_report("legendre", np.atleast_2d(points), per_point, worst, worst <= tol, tol=tol)


def polar_from_dual(z, eta):
    """Map dual coordinates Z to the polar point Y of the quadric."""
    z = np.asarray(z, dtype=float)
    n = len(z) - 4
    return np.concatenate([[z[n + 1]], -np.asarray(eta, dtype=float) @ z[1:n + 1],
                           [z[0], z[n + 3], z[n + 2]]])


def autoduality_check(sys, pair, eta, points, tol=AUTODUAL_TOL):
    """The dual generator line, mapped back through the quadric's polarity,
    must be the original generator line."""
    pts, U, F, dU, _, vals, grads = _pair_values(sys, pair, points)
    per_point = []
    worst = 0.0
    for k in range(len(pts)):
        p, r = _p_r(U, F, vals, k)
        zt, wt = _dual_pair(U[k], F[k], dU[k], [v[k] for v in vals], [g[k] for g in grads])
        line = np.vstack([polar_from_dual(zt, eta), polar_from_dual(wt, eta)])
        ang = float(numkit.principal_angles(np.vstack([p, r]), line).max())
        worst = max(worst, ang)
        per_point.append({"index": k, "max_principal_angle": ang})
    return make_report("autoduality", pts, per_point, worst, worst <= tol, tol=tol)


def hamiltonian_suite(spec, points):
    sys, laws = build_hamiltonian(spec)
    pair = default_pair(sys)
    eta = spec.eta_array()
    from .syscore import check_law
    law_reps = [check_law(sys, law, points) for law in laws]
    return {
        "laws": [{"law": r["law"], "max_residual": r["max_residual"], "pass": r["pass"]} for r in law_reps],
        "quadric": quadric_membership(sys, pair, eta, points),
        "legendre": legendre_check(sys, pair, eta, points),
        "autoduality": autoduality_check(sys, pair, eta, points),
    }
