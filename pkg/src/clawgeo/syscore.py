"""Conservation-law systems and their field-space analysis.

A system is carried parametrically: densities ``U(u)`` and fluxes ``F(u)``
over parameters ``u``, so that ``U(u)_t = F(u)_x``.  A primal system has
``U = u``.  Every derived system (reciprocal, dual, change of variables)
stays a function of the same ``u``.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property
import math

import numpy as np

from . import numkit
from .errors import (DependentDensitiesError, EvaluationSingularError, NotStrictlyHyperbolicError,
                     ReciprocalSingularError, SingularPencilError)
from .exprlang import (ONE, ZERO, LawDecl, SourceSpec, compile_program, div,
                       dot, format_source, gradient, mul, parse_source, sub, var)
from .exprlang.nodes import walk
from .reports import make_report

DEFAULT_DOMAIN = (0.6, 1.7)
FD_STEP = 1e-5
LAW_TOL = 1e-9
COND_LIMIT = 1e8
MAX_DENSITY_COND = 1e6
BRACKET_CONVENTION = "c^a_ij = -1/2 omega^a([xi_i, xi_j])"


@dataclass(frozen=True)
class ConservationLaw:
    """The 1-form ``density dx + flux dt``."""

    density: object
    flux: object
    name: str = ""

    def renamed(self, name):
        return replace(self, name=name)


@dataclass(frozen=True)
class ParametricSystem:
    var_names: tuple
    densities: tuple
    fluxes: tuple
    laws: tuple = ()
    provenance: str = "primal"
    name: str = "system"
    domain: tuple = DEFAULT_DOMAIN
    hamiltonian: object = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.var_names)
        if len(self.densities) != n or len(self.fluxes) != n:
            raise ValueError("need one density and one flux per variable")

    @property
    def n(self):
        return len(self.var_names)

    @property
    def is_primal(self):
        return all(d is var(i) for i, d in enumerate(self.densities))

    def canonical_laws(self):
        return tuple(ConservationLaw(d, f, f"sigma{i + 1}")
                     for i, (d, f) in enumerate(zip(self.densities, self.fluxes)))

    def law_basis(self):
        """Canonical laws, additional laws, then ``dx`` and ``dt``."""
        return (self.canonical_laws() + tuple(self.laws)
                + (ConservationLaw(ONE, ZERO, "dx"), ConservationLaw(ZERO, ONE, "dt")))

    def law(self, name):
        for law in self.law_basis():
            if law.name == name:
                return law
        raise KeyError(name)

    @cached_property
    def _jac_program(self):
        n = self.n
        exprs = list(self.densities) + list(self.fluxes)
        for e in self.densities:
            exprs += gradient(e, n)
        for e in self.fluxes:
            exprs += gradient(e, n)
        return compile_program(tuple(exprs))

    def evaluate(self, points, strict=True):
        """``(U, F, dU, dF)`` at ``points`` of shape ``(m, n)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n, m = self.n, pts.shape[0]
        vals = self._jac_program(pts, strict=strict)
        U, F = vals[:, :n], vals[:, n:2 * n]
        dU = vals[:, 2 * n:2 * n + n * n].reshape(m, n, n)
        dF = vals[:, 2 * n + n * n:].reshape(m, n, n)
        return U, F, dU, dF

    def jacobians(self, u):
        _, _, dU, dF = self.evaluate(u)
        return dU[0], dF[0]

    def with_laws(self, laws):
        return replace(self, laws=tuple(laws))


def law_gradients(law, n, points, strict=True):
    """Values and gradients ``(P, Q, dP, dQ)`` of a law at ``points``."""
    prog = compile_program((law.density, law.flux) + gradient(law.density, n) + gradient(law.flux, n))
    vals = prog(np.atleast_2d(points), strict=strict)
    return vals[:, 0], vals[:, 1], vals[:, 2:2 + n], vals[:, 2 + n:]


# ---------------------------------------------------------------- source I/O

def from_source(spec):
    if isinstance(spec, str):
        spec = parse_source(spec)
    n = spec.n
    dens = spec.densities if spec.densities is not None else tuple(var(i) for i in range(n))
    laws = tuple(ConservationLaw(l.density, l.flux, l.name) for l in spec.laws)
    domain = tuple(float(x) for x in spec.domain) if spec.domain else DEFAULT_DOMAIN
    return ParametricSystem(spec.var_names, tuple(dens), tuple(spec.fluxes), laws,
                            spec.origin or "primal", spec.name, domain, spec.hamiltonian)


def to_spec(sys):
    from fractions import Fraction
    dens = None if sys.is_primal else sys.densities
    laws = tuple(LawDecl(l.name, l.density, l.flux) for l in sys.laws)
    ham = sys.hamiltonian if sys.is_primal else None
    domain = tuple(Fraction(repr(float(x))) for x in sys.domain)
    origin = None if sys.provenance == "primal" else sys.provenance
    return SourceSpec(sys.name, tuple(sys.var_names), tuple(sys.fluxes), laws, ham, domain,
                      dens, origin)


def to_source(sys):
    return format_source(to_spec(sys))


# ------------------------------------------------------------ characteristic

@dataclass(frozen=True)
class CharFieldSet:
    point: np.ndarray
    speeds: tuple          # ProjectiveValue per family, descending, infinity first
    right: np.ndarray      # column alpha is xi_alpha (unit, sign convention)
    left: np.ndarray       # row alpha is omega^alpha, left @ right = I

    @property
    def n(self):
        return len(self.speeds)

    def xi(self, alpha):
        return self.right[:, alpha]

    def omega(self, alpha):
        return self.left[alpha]

    def finite_speeds(self):
        return np.array([s.speed for s in self.speeds])

    def as_dict(self):
        return {"point": self.point, "speeds": [s.as_list() for s in self.speeds],
                "xi": self.right.T, "omega": self.left}


def _fields_from_jacobians(u, dU, dF, primal):
    if primal:
        spec = numkit.eigen(dF)
        speeds = tuple(numkit.ProjectiveValue.from_speed(v) for v in spec.values)
        return CharFieldSet(np.array(u, dtype=float), speeds, spec.right, spec.left)
    pairs = numkit.pencil_eigs(dF, dU)
    right = np.column_stack([v for _, v in pairs])
    if numkit.rank(right, 1e-10) < len(pairs):
        raise NotStrictlyHyperbolicError("characteristic directions are dependent")
    return CharFieldSet(np.array(u, dtype=float), tuple(p for p, _ in pairs), right,
                        np.linalg.inv(right))


def characteristic_fields(sys, u):
    """Speeds, right fields and left forms of ``sys`` at the point ``u``."""
    dU, dF = sys.jacobians(u)
    return _fields_from_jacobians(u, dU, dF, sys.is_primal)


def _fields_many(sys, points):
    _, _, dU, dF = sys.evaluate(points)
    primal = sys.is_primal
    return [_fields_from_jacobians(p, a, b, primal) for p, a, b in zip(points, dU, dF)]


def min_speed_gap(fields):
    s = fields.speeds
    return min((s[i].distance(s[j]) for i in range(len(s)) for j in range(i)), default=math.inf)


def sample_points(*systems, count=100, seed=42, domain=None, min_gap=numkit.GAP_TOL,
                  max_cond=MAX_DENSITY_COND):
    """Seeded uniform samples in the domain box, valid for every given system.

    A candidate is rejected when any evaluation is singular, when some
    system fails strict hyperbolicity there (speed gap below ``min_gap``),
    or when a system without infinite speeds has a density Jacobian with
    condition number above ``max_cond`` (numerically not invertible).
    """
    if not systems:
        raise ValueError("need at least one system")
    n = systems[0].n
    lo, hi = domain or systems[0].domain
    rng = np.random.default_rng(seed)
    accepted = []
    tries = 0
    while len(accepted) < count:
        tries += 1
        if tries > 200 * count + 1000:
            raise NotStrictlyHyperbolicError("could not find enough admissible sample points")
        u = rng.uniform(lo, hi, size=n)
        if _admissible(systems, u, min_gap, max_cond):
            accepted.append(u)
    return np.array(accepted)


def _admissible(systems, u, min_gap, max_cond):
    for s in systems:
        try:
            dU, dF = s.jacobians(u)
            f = _fields_from_jacobians(u, dU, dF, s.is_primal)
        except (NotStrictlyHyperbolicError, SingularPencilError, EvaluationSingularError,
                np.linalg.LinAlgError):
            return False
        if min_speed_gap(f) < min_gap:
            return False
        if max_cond and not any(sp.is_infinite for sp in f.speeds) and np.linalg.cond(dU) > max_cond:
            return False
    return True


# ------------------------------------------------------------------ law check

_CHART_ANGLES = tuple(k * math.pi / 7 for k in range(1, 7))


def _chain_residual(dU, dF, dB, dA):
    """``|dA - dB dU^-1 dF| / (1 + |dA|)``, switching to a rotated (x, t)
    chart when ``dU`` is numerically singular.  Returns ``(residual, angle)``."""
    theta = 0.0
    if np.linalg.cond(dU) > COND_LIMIT:
        best = None
        for th in _CHART_ANGLES:
            c, s = math.cos(th), math.sin(th)
            cond = np.linalg.cond(c * dU + s * dF)
            if best is None or cond < best[0]:
                best = (cond, th)
        if best[0] > COND_LIMIT:
            raise SingularPencilError("no chart with invertible density Jacobian")
        theta = best[1]
        c, s = math.cos(theta), math.sin(theta)
        dU, dF = c * dU + s * dF, -s * dU + c * dF
        dB, dA = c * dB + s * dA, -s * dB + c * dA
    chain = dB @ np.linalg.solve(dU, dF)
    return float(np.linalg.norm(dA - chain) / (1.0 + np.linalg.norm(dA))), theta


def _family_residuals(fields, dB, dA):
    scale = 1.0 + np.linalg.norm(dB) + np.linalg.norm(dA)
    out = []
    for alpha, sp in enumerate(fields.speeds):
        xi = fields.xi(alpha)
        out.append(abs(sp.b * (dA @ xi) - sp.a * (dB @ xi)) / scale)
    return out


def check_law(sys, law, points, tol=LAW_TOL):
    """Verify ``dA = dB dU^-1 dF`` and its characteristic form at each point."""
    points = np.atleast_2d(points)
    _, _, dU, dF = sys.evaluate(points)
    _, _, dB, dA = law_gradients(law, sys.n, points)
    per_point = []
    worst = 0.0
    for k, u in enumerate(points):
        fields = _fields_from_jacobians(u, dU[k], dF[k], sys.is_primal)
        chain, theta = _chain_residual(dU[k], dF[k], dB[k], dA[k])
        fam = _family_residuals(fields, dB[k], dA[k])
        r = max(chain, max(fam))
        worst = max(worst, r)
        per_point.append({"index": k, "chain_rule": chain, "families": fam, "chart_angle": theta,
                          "pass": r <= tol})
    return make_report("check_law", points, per_point, worst, worst <= tol, law=law.name,
                       chain_rule_max=max(p["chain_rule"] for p in per_point),
                       family_max=max(max(p["families"]) for p in per_point), tol=tol)


# --------------------------------------------------------------- reciprocal

def _combine(basis, row):
    row = list(row) + [0] * (len(basis) - len(row))
    if len(row) != len(basis):
        raise ValueError(f"row has {len(row)} entries, basis has {len(basis)}")
    dens = dot([c for c in row if c != 0], [l.density for l, c in zip(basis, row) if c != 0])
    flux = dot([c for c in row if c != 0], [l.flux for l, c in zip(basis, row) if c != 0])
    return dens, flux


def _probe_gradients(laws, n, probes):
    """Per law: array (len(probes), 2n) of stacked (dP, dQ)."""
    out = []
    for law in laws:
        _, _, dP, dQ = law_gradients(law, n, probes, strict=False)
        out.append(np.hstack([dP, dQ]))
    return out


def reciprocal_transform(sys, row_x, row_t, basis=None, points=None, name=None):
    """Change of independent variables ``dX = B dx + A dt``, ``dT = N dx + M dt``.

    ``row_x`` and ``row_t`` are coefficient vectors over ``basis`` (default
    ``sys.law_basis()``; short rows are padded with zeros).  Every basis law
    ``(P|Q)`` maps to ``((PM - QN)/D | (QB - PA)/D)`` with ``D = BM - AN``.
    The new densities are the first ``n`` images that are pointwise
    independent; the other nontrivial independent images become its laws.
    Returns ``(system, images)`` with one image per basis law; the system's
    additional laws keep the image names (``<name>_r``).
    """
    basis = tuple(basis) if basis is not None else sys.law_basis()
    B, A = _combine(basis, row_x)
    N, M = _combine(basis, row_t)
    D = sub(mul(B, M), mul(A, N))
    if D is ZERO:
        raise ReciprocalSingularError("BM - AN vanishes identically")
    if points is None:
        points = sample_points(sys, count=12, seed=7)
    dvals = compile_program((D,))(points, strict=False)[:, 0]
    if not np.all(np.isfinite(dvals)) or np.min(np.abs(dvals)) < 1e-12:
        raise ReciprocalSingularError("BM - AN vanishes at a sample point")

    images = []
    for law in basis:
        P, Q = law.density, law.flux
        dens = div(sub(mul(P, M), mul(Q, N)), D)
        flux = div(sub(mul(Q, B), mul(P, A)), D)
        images.append(ConservationLaw(dens, flux, _image_name(law.name)))

    n = sys.n
    probes = np.asarray(points)[: max(4, 2 * n)]
    grads = _probe_gradients(images, n, probes)
    live = [k for k, g in enumerate(grads)
            if np.all(np.isfinite(g)) and np.max(np.abs(g)) > 1e-12]    # drop trivial images
    chosen = []
    for k in live:
        if len(chosen) == n:
            break
        if all(numkit.rank(np.vstack([grads[j][p] for j in chosen + [k]]), 1e-8) == len(chosen) + 1
               for p in range(len(probes))):
            chosen.append(k)
    stack = [grads[j].ravel() for j in chosen]
    extra = []
    for k in live:
        if k in chosen:
            continue
        if numkit.rank(np.vstack(stack + [grads[k].ravel()]), 1e-8) == len(stack) + 1:
            stack.append(grads[k].ravel())
            extra.append(k)
    if len(chosen) < n:
        raise DependentDensitiesError("transformed laws do not contain n independent densities")
    new = ParametricSystem(
        sys.var_names,
        tuple(images[k].density for k in chosen),
        tuple(images[k].flux for k in chosen),
        tuple(images[k] for k in extra),
        "reciprocal",
        name or f"{sys.name}_reciprocal",
        sys.domain,
    )
    return new, tuple(images)


def _image_name(name):
    return f"{name}_r"


# ------------------------------------------------------ finite-difference fields

def _aligned(vec, ref):
    return -vec if np.dot(vec, ref) < 0 else vec


def _chart_speed(speed, use_inverse):
    if use_inverse:
        return speed.b / speed.a
    return speed.a / speed.b


def linear_degeneracy(sys, points, h=FD_STEP, tol=1e-6):
    """Per family, ``max |xi_a(lambda^a)|`` by central differences along ``xi_a``.

    Families whose speed is (near) infinite are differentiated in the chart
    ``b/a``; vanishing of the derivative is chart-independent.
    """
    points = np.atleast_2d(points)
    n = sys.n
    worst = np.zeros(n)
    per_point = []
    for k, u in enumerate(points):
        f0 = characteristic_fields(sys, u)
        row = []
        for a in range(n):
            xi = f0.xi(a)
            inv = abs(f0.speeds[a].b) < abs(f0.speeds[a].a)
            fp = characteristic_fields(sys, u + h * xi)
            fm = characteristic_fields(sys, u - h * xi)
            d = (_chart_speed(fp.speeds[a], inv) - _chart_speed(fm.speeds[a], inv)) / (2 * h)
            row.append(abs(d))
        worst = np.maximum(worst, row)
        per_point.append({"index": k, "families": row})
    return make_report("linear_degeneracy", points, per_point, float(worst.max()),
                       bool(worst.max() <= tol), per_family=worst.tolist(), tol=tol)


def temple_rectilinearity(sys, points, h=FD_STEP, tol=1e-5):
    """Per family, turning of the rarefaction curves in density space.

    The unit tangent is ``T = dU xi / |dU xi|``; the residual is the part of
    ``D_xi T`` orthogonal to ``T``, per unit step along the unit field ``xi``
    (zero iff the curves are straight).  For ``U = u`` this is the turning of
    ``xi`` along itself.
    """
    points = np.atleast_2d(points)
    n = sys.n
    worst = np.zeros(n)
    per_point = []
    for k, u in enumerate(points):
        f0 = characteristic_fields(sys, u)
        dU0, _ = sys.jacobians(u)
        row = []
        for a in range(n):
            xi = f0.xi(a)
            w = dU0 @ xi
            if np.linalg.norm(w) < 1e-10 * max(1.0, np.linalg.norm(dU0)):
                row.append(math.inf)            # curve collapses in density space
                continue
            T = w / np.linalg.norm(w)
            tangents = []
            for sgn in (1, -1):
                q = u + sgn * h * xi
                fq = characteristic_fields(sys, q)
                dUq, _ = sys.jacobians(q)
                t = dUq @ _aligned(fq.xi(a), xi)
                tangents.append(t / np.linalg.norm(t))
            dT = (tangents[0] - tangents[1]) / (2 * h)
            row.append(float(np.linalg.norm(dT - np.dot(dT, T) * T)))
        worst = np.maximum(worst, row)
        per_point.append({"index": k, "families": row})
    return make_report("temple_rectilinearity", points, per_point, float(worst.max()),
                       bool(worst.max() <= tol), per_family=worst.tolist(), tol=tol)


# -------------------------------------------------------- change of variables

def change_variables(sys, new_laws, points=None):
    """Re-express ``sys`` with the densities and fluxes of ``n`` of its laws."""
    new_laws = tuple(new_laws)
    n = sys.n
    if len(new_laws) != n:
        raise ValueError(f"need exactly {n} laws")
    if points is None:
        points = sample_points(sys, count=12, seed=7)
    dens_grads = compile_program(tuple(g for l in new_laws for g in gradient(l.density, n)))
    vals = dens_grads(points, strict=False).reshape(len(points), n, n)
    for J in vals:
        if not np.all(np.isfinite(J)) or numkit.rank(J, 1e-8) < n:
            raise DependentDensitiesError("new densities are dependent")
    for law in new_laws:
        rep = check_law(sys, law, points)
        if not rep["pass"]:
            raise ValueError(f"law {law.name!r} is not a conservation law of the system "
                             f"(residual {rep['max_residual']:.3g})")
    used = {(l.density, l.flux) for l in new_laws}
    rest = tuple(l for l in sys.canonical_laws() + tuple(sys.laws) if (l.density, l.flux) not in used)
    return ParametricSystem(sys.var_names, tuple(l.density for l in new_laws),
                            tuple(l.flux for l in new_laws), rest, "change-of-variables",
                            f"{sys.name}_cv", sys.domain)


# ---------------------------------------------------- structure coefficients

@dataclass(frozen=True)
class StructureCoefficients:
    point: np.ndarray
    c: np.ndarray         # c[alpha, i, j], antisymmetric in (i, j)
    lam: np.ndarray       # lam[alpha, i] = xi_i(lambda^alpha) in the chosen speed chart
    nondiagonalizable: tuple
    convention: str = BRACKET_CONVENTION

    def as_dict(self):
        return {"point": self.point, "c": self.c, "lambda_i": self.lam,
                "nondiagonalizable": list(self.nondiagonalizable), "convention": self.convention}


def _field_derivatives(sys, u, f0, h):
    """``D[a][:, k] = d xi_a / d u_k`` and speed derivatives ``S[a, k]``."""
    n = sys.n
    D = np.zeros((n, n, n))
    S = np.zeros((n, n))
    inv = [abs(s.b) < abs(s.a) for s in f0.speeds]
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fp = characteristic_fields(sys, u + e)
        fm = characteristic_fields(sys, u - e)
        for a in range(n):
            xp = _aligned(fp.xi(a), f0.xi(a))
            xm = _aligned(fm.xi(a), f0.xi(a))
            D[a][:, k] = (xp - xm) / (2 * h)
            S[a, k] = (_chart_speed(fp.speeds[a], inv[a]) - _chart_speed(fm.speeds[a], inv[a])) / (2 * h)
    return D, S


def structure_coefficients(sys, u, h=FD_STEP, tol=1e-6):
    u = np.asarray(u, dtype=float)
    n = sys.n
    f0 = characteristic_fields(sys, u)
    D, S = _field_derivatives(sys, u, f0, h)
    c = np.zeros((n, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            bracket = D[j] @ f0.xi(i) - D[i] @ f0.xi(j)
            coeffs = -0.5 * (f0.left @ bracket)
            c[:, i, j] = coeffs
            c[:, j, i] = -coeffs
    lam = np.array([[S[a] @ f0.xi(i) for i in range(n)] for a in range(n)])
    flags = []
    for a in range(n):
        others = [i for i in range(n) if i != a]
        flags.append(bool(any(abs(c[a, i, j]) > tol for i in others for j in others if i != j)))
    return StructureCoefficients(u, c, lam, tuple(flags))


def structure_report(sys, points, h=FD_STEP):
    points = np.atleast_2d(points)
    per_point = []
    flags = None
    for k, u in enumerate(points):
        sc = structure_coefficients(sys, u, h)
        per_point.append({"index": k, "c": sc.c, "nondiagonalizable": list(sc.nondiagonalizable)})
        f = np.array(sc.nondiagonalizable)
        flags = f if flags is None else flags & f
    antisym = max(float(np.abs(p["c"] + np.transpose(p["c"], (0, 2, 1))).max()) for p in per_point)
    return make_report("structure_coefficients", points, per_point, antisym, antisym == 0.0,
                       nondiagonalizable_all_points=flags.tolist(), convention=BRACKET_CONVENTION)


def law_rank(sys, laws, points):
    """Rank of the stacked law gradients over several points (functional independence)."""
    grads = _probe_gradients(laws, sys.n, np.atleast_2d(points))
    return numkit.rank(np.vstack([g.ravel() for g in grads]), 1e-8)


def density_rank(sys, laws, points):
    """Rank of the stacked density gradients over several points."""
    mats = []
    for law in laws:
        _, _, dP, _ = law_gradients(law, sys.n, np.atleast_2d(points), strict=False)
        mats.append(dP.ravel())
    return numkit.rank(np.vstack(mats), 1e-8)


def expression_count(sys):
    return len(walk(*sys.densities, *sys.fluxes, *(e for l in sys.laws for e in (l.density, l.flux))))
