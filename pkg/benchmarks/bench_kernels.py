"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on inputs of the size the tests and the Monte Carlo
studies use; both backends are also checked to agree before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from ccmar import _kernels_py as py
from ccmar.khmaladze import default_table
from ccmar.normality import _process_pieces

try:
    from ccmar import _kernels as cy
except ImportError:  # pragma: no cover - extension not built
    cy = None


def cases(rng):
    table = default_table()
    out = []
    for n in (200, 2000):
        z = np.sort(rng.normal(size=n))
        lo, hi, level, slope = _process_pieces(z, table)
        args = (lo, hi, level, slope, table.t_min, table.step, table.values, table.derivs, 50)
        out.append((f"martingale_gap_max n={n}", "martingale_gap_max", args))
    for n in (200, 2000, 20000):
        e = np.sort(np.round(rng.normal(size=n), 3))
        w = rng.normal(size=n)
        out.append((f"marked_partial_sum_max n={n}", "marked_partial_sum_max", (e, w)))
    inc = rng.standard_normal((400, 10_000)) / 100.0
    out.append(("sup_abs_walk 400x10000 motion", "sup_abs_walk", (inc, False)))
    out.append(("sup_abs_walk 400x10000 bridge", "sup_abs_walk", (inc, True)))
    return out


def agree(a, b) -> bool:
    a, b = np.atleast_1d(np.asarray(a[0] if isinstance(a, tuple) else a)), np.atleast_1d(
        np.asarray(b[0] if isinstance(b, tuple) else b)
    )
    return bool(np.allclose(a, b, rtol=1e-9, atol=1e-9))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if cy is None:
        print("compiled extension not available; build it with `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}  agree")
    for label, name, call_args in cases(rng):
        f_py, f_cy = getattr(py, name), getattr(cy, name)
        ok = agree(f_py(*call_args), f_cy(*call_args))
        t_py = min(timeit.repeat(lambda: f_py(*call_args), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: f_cy(*call_args), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:40s} {t_py:12.3f} {t_cy:12.3f} {t_py / t_cy:8.1f}x  {ok}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
