"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and ``CLAWGEO_NUMBA`` is not set
to ``0``/``false``/``off``.  Both paths are always importable so the
benchmark and the tests can compare them directly.
"""
import os

import numpy as np

# opcodes of the flattened expression program
OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POW = 7


def _env_wants_numba():
    flag = os.environ.get("CLAWGEO_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _env_wants_numba()


def _ipow(x, k):
    result = 1.0
    base = x
    while k > 0:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


def _run_program_loops(code, consts, points, outputs, values, bad):
    """Evaluate the program point by point.

    ``bad[k]`` receives ``1 + index`` of the first instruction that divided
    by zero (or produced a non-finite value) at point ``k``.
    """
    m = points.shape[0]
    n = code.shape[0]
    nout = outputs.shape[0]
    reg = np.empty(n)
    for k in range(m):
        for i in range(n):
            op = code[i, 0]
            if op == OP_CONST:
                reg[i] = consts[i]
            elif op == OP_VAR:
                reg[i] = points[k, code[i, 1]]
            elif op == OP_ADD:
                reg[i] = reg[code[i, 1]] + reg[code[i, 2]]
            elif op == OP_SUB:
                reg[i] = reg[code[i, 1]] - reg[code[i, 2]]
            elif op == OP_MUL:
                reg[i] = reg[code[i, 1]] * reg[code[i, 2]]
            elif op == OP_DIV:
                d = reg[code[i, 2]]
                if d == 0.0:
                    if bad[k] == 0:
                        bad[k] = i + 1
                    reg[i] = np.nan
                else:
                    reg[i] = reg[code[i, 1]] / d
            elif op == OP_NEG:
                reg[i] = -reg[code[i, 1]]
            else:
                reg[i] = _ipow(reg[code[i, 1]], code[i, 3])
            if bad[k] == 0 and not np.isfinite(reg[i]):
                bad[k] = i + 1
        for j in range(nout):
            values[k, j] = reg[outputs[j]]


# double-double arithmetic: a value is an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
# The helpers only use + - * /, so they work on scalars (jitted) and on numpy arrays.

def _two_sum(a, b):
    s = a + b
    v = s - a
    return s, (a - (s - v)) + (b - v)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = 134217729.0 * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    e = e + t
    s, e = _quick_two_sum(s, e)
    e = e + f
    return _quick_two_sum(s, e)


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return _quick_two_sum(p, e)


def _dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = _dd_mul(bh, bl, q1, 0.0 * q1)
    rh, rl = _dd_add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = _dd_mul(bh, bl, q2, 0.0 * q2)
    rh, rl = _dd_add(rh, rl, -ph, -pl)
    q3 = rh / bh
    sh, sl = _quick_two_sum(q1, q2)
    return _dd_add(sh, sl, q3, 0.0 * q3)


def _dd_pow(h, l, k):
    rh = 1.0 + 0.0 * h
    rl = 0.0 * h
    while k > 0:
        if k & 1:
            rh, rl = _dd_mul(rh, rl, h, l)
        h, l = _dd_mul(h, l, h, l)
        k >>= 1
    return rh, rl


def _run_program_dd_loops(code, consts, consts_lo, points, outputs, values, bad):
    m = points.shape[0]
    n = code.shape[0]
    nout = outputs.shape[0]
    hi = np.empty(n)
    lo = np.empty(n)
    for k in range(m):
        for i in range(n):
            op = code[i, 0]
            a = code[i, 1]
            b = code[i, 2]
            if op == OP_CONST:
                hi[i] = consts[i]
                lo[i] = consts_lo[i]
            elif op == OP_VAR:
                hi[i] = points[k, a]
                lo[i] = 0.0
            elif op == OP_ADD:
                hi[i], lo[i] = _dd_add(hi[a], lo[a], hi[b], lo[b])
            elif op == OP_SUB:
                hi[i], lo[i] = _dd_add(hi[a], lo[a], -hi[b], -lo[b])
            elif op == OP_MUL:
                hi[i], lo[i] = _dd_mul(hi[a], lo[a], hi[b], lo[b])
            elif op == OP_DIV:
                if hi[b] == 0.0:
                    if bad[k] == 0:
                        bad[k] = i + 1
                    hi[i] = np.nan
                    lo[i] = 0.0
                else:
                    hi[i], lo[i] = _dd_div(hi[a], lo[a], hi[b], lo[b])
            elif op == OP_NEG:
                hi[i] = -hi[a]
                lo[i] = -lo[a]
            else:
                hi[i], lo[i] = _dd_pow(hi[a], lo[a], code[i, 3])
            if bad[k] == 0 and not np.isfinite(hi[i]):
                bad[k] = i + 1
        for j in range(nout):
            values[k, j] = hi[outputs[j]] + lo[outputs[j]]


def run_program_dd_numpy(code, consts, consts_lo, points, outputs):
    """Double-double evaluation vectorised over points."""
    m = points.shape[0]
    n = code.shape[0]
    hi = np.empty((n, m))
    lo = np.empty((n, m))
    bad = np.zeros(m, dtype=np.int64)
    with np.errstate(all="ignore"):
        for i in range(n):
            op, a, b, e = code[i]
            if op == OP_CONST:
                hi[i], lo[i] = consts[i], consts_lo[i]
            elif op == OP_VAR:
                hi[i], lo[i] = points[:, a], 0.0
            elif op == OP_ADD:
                hi[i], lo[i] = _dd_add(hi[a], lo[a], hi[b], lo[b])
            elif op == OP_SUB:
                hi[i], lo[i] = _dd_add(hi[a], lo[a], -hi[b], -lo[b])
            elif op == OP_MUL:
                hi[i], lo[i] = _dd_mul(hi[a], lo[a], hi[b], lo[b])
            elif op == OP_DIV:
                zero = hi[b] == 0.0
                dh = np.where(zero, 1.0, hi[b])
                qh, ql = _dd_div(hi[a], lo[a], dh, lo[b])
                hi[i] = np.where(zero, np.nan, qh)
                lo[i] = np.where(zero, 0.0, ql)
            elif op == OP_NEG:
                hi[i], lo[i] = -hi[a], -lo[a]
            else:
                hi[i], lo[i] = _dd_pow(hi[a], lo[a], int(e))
            fresh = (bad == 0) & ~np.isfinite(hi[i])
            bad[fresh] = i + 1
    return (hi[outputs] + lo[outputs]).T.copy(), bad


def run_program_numpy(code, consts, points, outputs):
    """Vectorised evaluation: one numpy op per instruction over all points."""
    m = points.shape[0]
    n = code.shape[0]
    reg = np.empty((n, m))
    bad = np.zeros(m, dtype=np.int64)
    with np.errstate(all="ignore"):
        for i in range(n):
            op, a, b, e = code[i]
            if op == OP_CONST:
                reg[i] = consts[i]
            elif op == OP_VAR:
                reg[i] = points[:, a]
            elif op == OP_ADD:
                reg[i] = reg[a] + reg[b]
            elif op == OP_SUB:
                reg[i] = reg[a] - reg[b]
            elif op == OP_MUL:
                reg[i] = reg[a] * reg[b]
            elif op == OP_DIV:
                d = reg[b]
                zero = d == 0.0
                reg[i] = np.where(zero, np.nan, reg[a] / np.where(zero, 1.0, d))
            elif op == OP_NEG:
                reg[i] = -reg[a]
            else:
                reg[i] = reg[a] ** int(e)
            fresh = (bad == 0) & ~np.isfinite(reg[i])
            bad[fresh] = i + 1
    return reg[outputs].T.copy(), bad


def run_program_python(code, consts, points, outputs):
    values = np.empty((points.shape[0], outputs.shape[0]))
    bad = np.zeros(points.shape[0], dtype=np.int64)
    _run_program_loops(code, consts, points, outputs, values, bad)
    return values, bad


def _monomial_matrix_loops(points, exponents, out):
    for r in range(points.shape[0]):
        for c in range(exponents.shape[0]):
            acc = 1.0
            for j in range(points.shape[1]):
                acc *= _ipow(points[r, j], exponents[c, j])
            out[r, c] = acc


def monomial_matrix_numpy(points, exponents):
    """Row r, column c: prod_j points[r, j] ** exponents[c, j]."""
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


if USE_NUMBA:
    _ipow_jit = numba.njit(cache=True)(_ipow)
    # rebinding the global lets the jitted loops resolve _ipow to the jitted one
    _ipow = _ipow_jit
    _run_program_jit = numba.njit(cache=True, error_model="numpy")(_run_program_loops)
    _monomial_matrix_jit = numba.njit(cache=True)(_monomial_matrix_loops)
    # same rebinding trick for the double-double helpers
    _two_sum = numba.njit(cache=True, inline="always")(_two_sum)
    _quick_two_sum = numba.njit(cache=True, inline="always")(_quick_two_sum)
    _split = numba.njit(cache=True, inline="always")(_split)
    _two_prod = numba.njit(cache=True, inline="always")(_two_prod)
    _dd_add = numba.njit(cache=True, inline="always")(_dd_add)
    _dd_mul = numba.njit(cache=True, inline="always")(_dd_mul)
    _dd_div = numba.njit(cache=True)(_dd_div)
    _dd_pow = numba.njit(cache=True)(_dd_pow)
    _run_program_dd_jit = numba.njit(cache=True, error_model="numpy")(_run_program_dd_loops)


def run_program_numba(code, consts, points, outputs):
    if not USE_NUMBA:
        raise RuntimeError("numba path disabled (CLAWGEO_NUMBA=0 or numba missing)")
    values = np.empty((points.shape[0], outputs.shape[0]))
    bad = np.zeros(points.shape[0], dtype=np.int64)
    _run_program_jit(code, consts, points, outputs, values, bad)
    return values, bad


def run_program_dd_numba(code, consts, consts_lo, points, outputs):
    if not USE_NUMBA:
        raise RuntimeError("numba path disabled (CLAWGEO_NUMBA=0 or numba missing)")
    values = np.empty((points.shape[0], outputs.shape[0]))
    bad = np.zeros(points.shape[0], dtype=np.int64)
    _run_program_dd_jit(code, consts, consts_lo, points, outputs, values, bad)
    return values, bad


def monomial_matrix_numba(points, exponents):
    if not USE_NUMBA:
        raise RuntimeError("numba path disabled (CLAWGEO_NUMBA=0 or numba missing)")
    out = np.empty((points.shape[0], exponents.shape[0]))
    _monomial_matrix_jit(np.ascontiguousarray(points, dtype=np.float64),
                         np.ascontiguousarray(exponents, dtype=np.int64), out)
    return out


def run_program(code, consts, points, outputs):
    """Dispatch to the active backend. Returns ``(values, bad)``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return run_program_numba(code, consts, points, outputs)
    return run_program_numpy(code, consts, points, outputs)


def run_program_dd(code, consts, consts_lo, points, outputs):
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return run_program_dd_numba(code, consts, consts_lo, points, outputs)
    return run_program_dd_numpy(code, consts, consts_lo, points, outputs)


def monomial_matrix(points, exponents):
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return monomial_matrix_numba(points, exponents)
    return monomial_matrix_numpy(points, exponents)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
