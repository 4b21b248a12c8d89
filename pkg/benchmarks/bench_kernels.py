"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--points 20000] [--repeat 5]

The numba timings exclude the first (compiling) call.
"""
import argparse
import timeit

import numpy as np

from clawgeo import _kernels as K
from clawgeo.cli import load_system
from clawgeo.exprlang import compile_program, gradient
from clawgeo.webcubic import EXPONENTS


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--system", default="example_intro")
    args = ap.parse_args(argv)

    sys = load_system(args.system)
    exprs = []
    for law in sys.canonical_laws() + tuple(sys.laws):
        exprs += [law.density, law.flux, *gradient(law.flux, sys.n)]
    prog = compile_program(tuple(exprs))
    rng = np.random.default_rng(42)
    pts = rng.uniform(0.5, 2.0, size=(args.points, sys.n))
    cubic_pts = rng.standard_normal((args.points, 5))
    exps = np.asarray(EXPONENTS, dtype=np.int64)

    cases = {
        "run_program": (
            lambda: K.run_program_numpy(prog.code, prog.consts, pts, prog.outputs),
            lambda: K.run_program_numba(prog.code, prog.consts, pts, prog.outputs)),
        "run_program_dd": (
            lambda: K.run_program_dd_numpy(prog.code, prog.consts, prog.consts_lo, pts, prog.outputs),
            lambda: K.run_program_dd_numba(prog.code, prog.consts, prog.consts_lo, pts, prog.outputs)),
        "monomial_matrix": (
            lambda: K.monomial_matrix_numpy(cubic_pts, exps),
            lambda: K.monomial_matrix_numba(cubic_pts, exps)),
    }
    print(f"{len(prog.code)} instructions, {len(prog.outputs)} outputs, {args.points} points")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = _best(np_fn, args.repeat)
        if K.USE_NUMBA:
            nb_fn()
            t_nb = _best(nb_fn, args.repeat)
            print(f"{name:<18}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<18}{1e3 * t_np:>12.2f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
