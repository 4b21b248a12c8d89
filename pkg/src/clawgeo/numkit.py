"""Small dense real linear algebra: spectra, matrix pencils, rank and fitting.

Every rank decision is relative to the largest singular value of the matrix
at hand.  Eigenvectors are unit vectors whose largest-magnitude component is
positive.
"""
from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateInputError, NotStrictlyHyperbolicError, SingularPencilError

RANK_TOL = 1e-9
GAP_TOL = 1e-6
INF_SNAP = 1e-8


def sign_fix(v):
    """Unit vector with its largest-magnitude component positive."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def normalize_projective(v, tol=1e-14):
    """Scale so that max |coordinate| = 1 and the first nonzero entry is positive."""
    v = np.asarray(v, dtype=float)
    top = np.max(np.abs(v))
    if top == 0 or not np.isfinite(top):
        raise DegenerateInputError("zero vector has no projective class")
    v = v / top
    first = np.flatnonzero(np.abs(v) > tol)[0]
    return -v if v[first] < 0 else v


@dataclass(frozen=True)
class ProjectiveValue:
    """The projective speed ``[a:b]`` standing for ``a/b`` (``b = 0`` is infinite)."""

    a: float
    b: float

    @classmethod
    def make(cls, a, b):
        a, b = float(a), float(b)
        top = max(abs(a), abs(b))
        if top == 0 or not math.isfinite(top):
            raise ValueError("projective value needs (a, b) != (0, 0)")
        a, b = a / top, b / top
        if abs(b) <= INF_SNAP * abs(a):
            b = 0.0
        if a < 0 or (a == 0 and b < 0):
            a, b = -a, -b
        return cls(a + 0.0, b + 0.0)

    @classmethod
    def from_speed(cls, speed):
        if math.isinf(speed):
            return cls.make(1.0, 0.0)
        return cls.make(speed, 1.0)

    @property
    def is_infinite(self):
        return self.b == 0.0

    @property
    def speed(self):
        return math.inf if self.b == 0.0 else self.a / self.b

    def sort_key(self):
        """Descending order with the infinite speed first."""
        return -math.inf if self.b == 0.0 else -self.a / self.b

    def distance(self, other):
        """Sine of the angle between the two lines through the origin of R^2."""
        return abs(self.a * other.b - self.b * other.a) / (
            math.hypot(self.a, self.b) * math.hypot(other.a, other.b))

    def as_list(self):
        return [self.a, self.b]

    def __str__(self):
        return f"[{self.a:.12g}:{self.b:.12g}]"


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with right columns and dual left rows."""

    values: np.ndarray   # (n,)
    right: np.ndarray    # (n, n), column k is the k-th right vector
    left: np.ndarray     # (n, n), row k is the k-th left vector, left @ right = I

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        for k in range(len(self.values)):
            yield self.values[k], self.right[:, k], self.left[k]


def _check_gaps(keys, scale, what):
    keys = sorted(keys)
    for x, y in zip(keys, keys[1:]):
        if abs(y - x) < GAP_TOL * scale:
            raise NotStrictlyHyperbolicError(f"{what} are not distinct (gap {abs(y - x):.3g})")


def eigen(matrix):
    """Real eigen-decomposition of a strictly hyperbolic matrix."""
    m = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.linalg.norm(m, 2), 1e-300)
    w, v = np.linalg.eig(m)
    if np.any(np.abs(w.imag) > GAP_TOL * scale):
        raise NotStrictlyHyperbolicError("complex eigenvalues")
    w = w.real
    _check_gaps(w, scale, "eigenvalues")
    order = np.argsort(-w)
    w = w[order]
    right = np.empty_like(m)
    for k, lam in enumerate(w):
        # refine against the real matrix: smallest right singular vector of M - lam I
        _, _, vt = np.linalg.svd(m - lam * np.eye(len(m)))
        right[:, k] = sign_fix(vt[-1])
    left = np.linalg.inv(right)
    return Spectrum(w, right, left)


def _pencil_regular(a, b, rng):
    scale = np.linalg.norm(a) + np.linalg.norm(b)
    for _ in range(3):
        s, t = rng.standard_normal(2)
        sv = np.linalg.svd(s * a - t * b, compute_uv=False)
        if sv[-1] > 1e-12 * scale:
            return True
    return False


def pencil_eigs(A, B, tol=RANK_TOL):
    """Projective roots ``[a:b]`` of ``det(b A - a B) = 0`` with unit right vectors.

    Roots are returned by descending speed, the infinite one first.
    """
    a_mat = np.asarray(A, dtype=float)
    b_mat = np.asarray(B, dtype=float)
    n = a_mat.shape[0]
    if not _pencil_regular(a_mat, b_mat, np.random.default_rng(12345)):
        raise SingularPencilError("det(aA - bB) vanishes identically")
    ab = sla.eig(a_mat, b_mat, right=False, homogeneous_eigvals=True)
    roots = []
    for alpha, beta in zip(*ab):
        z = np.array([alpha, beta])
        k = int(np.argmax(np.abs(z)))
        z = z * (abs(z[k]) / z[k])
        if abs(z[0].imag) + abs(z[1].imag) > GAP_TOL * abs(z[k]):
            raise NotStrictlyHyperbolicError("complex projective speeds")
        roots.append(ProjectiveValue.make(z[0].real, z[1].real))
    for i in range(n):
        for j in range(i):
            if roots[i].distance(roots[j]) < GAP_TOL:
                raise NotStrictlyHyperbolicError(
                    f"projective speeds {roots[j]} and {roots[i]} are not distinct")
    roots.sort(key=ProjectiveValue.sort_key)
    out = []
    for r in roots:
        _, _, vt = np.linalg.svd(r.b * a_mat - r.a * b_mat)
        out.append((r, sign_fix(vt[-1])))
    return out


def nullspace(M, tol=RANK_TOL):
    """Orthonormal basis (as columns) of the right null space."""
    m = np.atleast_2d(np.asarray(M, dtype=float))
    if m.size == 0:
        return np.eye(m.shape[1])
    if not np.any(m):
        return np.eye(m.shape[1])
    return sla.null_space(m, rcond=tol)


def rank(M, tol=RANK_TOL):
    m = np.atleast_2d(np.asarray(M, dtype=float))
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def singular_values(M):
    return np.linalg.svd(np.atleast_2d(np.asarray(M, dtype=float)), compute_uv=False)


def fit_hyperplane(points):
    """Least-squares hyperplane through homogeneous points.

    Returns ``(coefficients, max_residual)`` where the residual of a point
    is ``|<c, p>| / (|c| |p|)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m, d1 = pts.shape
    if m < d1:
        raise DegenerateInputError(f"need at least {d1} points, got {m}")
    unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    if rank(unit, 1e-12) < 2:
        raise DegenerateInputError("all points coincide")
    _, _, vt = np.linalg.svd(unit)
    c = normalize_projective(vt[-1])
    res = np.abs(unit @ c) / np.linalg.norm(c)
    return c, float(res.max())


def principal_angles(A, B):
    """Principal angles between the row spans of ``A`` and ``B`` (radians)."""
    a = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_2d(np.asarray(B, dtype=float))
    return sla.subspace_angles(a.T, b.T)


def vector_angle(x, y):
    """Angle between the lines spanned by ``x`` and ``y`` (sign-blind)."""
    return float(principal_angles(np.atleast_2d(x), np.atleast_2d(y)).max())


def in_span_residual(rows, v):
    """Relative distance of ``v`` from the row span of ``rows``."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    coef, *_ = np.linalg.lstsq(rows.T, v, rcond=None)
    return float(np.linalg.norm(rows.T @ coef - v) / nv)
