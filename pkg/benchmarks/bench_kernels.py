"""Compare the compiled and numpy finite-volume kernels.

    python3 benchmarks/bench_kernels.py [--sizes 100 400 1600] [--repeat 5]

Prints time per right-hand-side evaluation, the speedup, and the largest
difference between the two backends on the same input.
"""

import argparse
import timeit

import numpy as np

from cns_observer import kernels


def make_state(n, amplitude=0.3):
    x = (np.arange(n) + 0.5) / n
    rho = 1.0 + amplitude * np.sin(2 * np.pi * x)
    mom = rho * amplitude * np.cos(6 * np.pi * x)
    return rho, mom


def time_call(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--gamma", type=float, default=1.4)
    ap.add_argument("--nu", type=float, default=0.05)
    args = ap.parse_args(argv)

    py = kernels.python_backend
    cy = kernels.compiled_backend
    if cy is None:
        print("compiled backend not built; timing the numpy kernels only")

    header = f"{'kernel':<16}{'n':>6}{'numpy [us]':>13}{'compiled [us]':>15}{'speedup':>9}{'max diff':>11}"
    print(header)
    print("-" * len(header))
    for n in args.sizes:
        rho, mom = make_state(n)
        dx = 1.0 / n
        number = max(10, 20000 // n)
        cases = [
            (f"nonlinear/{name}", lambda b, f=f: b.nonlinear_rhs(rho, mom, args.gamma, args.nu, dx, f, kernels.RECON_VANLEER))
            for name, f in kernels.FLUXES.items()
        ]
        r, v = rho - 1.0, mom / rho
        cases.append(("linear", lambda b: b.linear_rhs(r, v, 1.0, args.gamma, args.nu, dx)))
        for label, call in cases:
            t_py = time_call(lambda: call(py), number, args.repeat)
            if cy is None:
                print(f"{label:<16}{n:>6}{t_py * 1e6:>13.1f}{'-':>15}{'-':>9}{'-':>11}")
                continue
            t_cy = time_call(lambda: call(cy), number, args.repeat)
            diff = max(float(np.max(np.abs(a - b))) for a, b in zip(call(py), call(cy)))
            print(f"{label:<16}{n:>6}{t_py * 1e6:>13.1f}{t_cy * 1e6:>15.1f}{t_py / t_cy:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
