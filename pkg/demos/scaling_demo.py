"""Narrative demo: how run time grows as the lattice gets finer.

Times the fast solvers against their quadratic reference solvers over a
doubling ladder of step counts.  The reference solvers roughly quadruple
per doubling; the fast solvers stay near a factor of two, so the gap
widens until the fast American call is two orders of magnitude ahead at
desk-scale resolutions.

Run:  python3 demos/scaling_demo.py          (about half a minute)
"""

import time

from fftlattice import (
    OptionSpec,
    baseline_american_call,
    baseline_european,
    fast_american_call,
    fast_european,
    fast_put_bsm,
)


def spec(steps: int) -> OptionSpec:
    return OptionSpec(100.0, 90.0, 0.03, 0.07, 0.25, 365, steps)


def put_spec(steps: int) -> OptionSpec:
    return OptionSpec(100.0, 100.0, 0.05, 0.0, 0.20, 365, steps)


def best_ms(fn, reps: int = 3) -> float:
    best = float("inf")
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best * 1e3


def ladder(title: str, fn, sizes, reps: int = 3) -> None:
    print(f"\n{title}")
    print(f"  {'steps':>8} {'best ms':>10} {'x per doubling':>15}")
    prev = None
    for steps in sizes:
        ms = best_ms(lambda: fn(steps), reps)
        ratio = "" if prev is None else f"{ms / prev:14.2f}x"
        print(f"  {steps:>8} {ms:>10.2f} {ratio:>15}")
        prev = ms


def main() -> None:
    # One pass through every solver first so just-in-time compilation
    # happens outside the timed ladders.
    warm = spec(512)
    fast_european(warm)
    baseline_european(warm)
    fast_american_call(warm)
    baseline_american_call(warm)
    fast_put_bsm(put_spec(512), 0.4)

    fast_sizes = (2**13, 2**14, 2**15, 2**16, 2**17)
    base_sizes = (2**11, 2**12, 2**13, 2**14)

    ladder("European call — fast (composed stencil power)",
           lambda t: fast_european(spec(t)), fast_sizes, reps=5)
    ladder("European call — baseline (quadratic sweep)",
           lambda t: baseline_european(spec(t)), base_sizes, reps=5)
    ladder("American call — fast (trapezoid decomposition)",
           lambda t: fast_american_call(spec(t)), fast_sizes)
    ladder("American call — baseline (quadratic sweep)",
           lambda t: baseline_american_call(spec(t)), base_sizes)
    ladder("American put — fast (staged halving grid)",
           lambda t: fast_put_bsm(put_spec(t), 0.4), fast_sizes)

    top = 2**17
    fast_am = best_ms(lambda: fast_american_call(spec(top)))
    base_am = best_ms(lambda: baseline_american_call(spec(top)), reps=1)
    fast_eu = best_ms(lambda: fast_european(spec(top)), reps=5)
    base_eu = best_ms(lambda: baseline_european(spec(top)), reps=1)
    print(f"\nAt {top} steps:")
    print(
        f"  American call: baseline {base_am / 1e3:6.2f} s vs fast "
        f"{fast_am:7.1f} ms  ({base_am / fast_am:5.0f}x)"
    )
    print(
        f"  European call: baseline {base_eu / 1e3:6.2f} s vs fast "
        f"{fast_eu:7.2f} ms  ({base_eu / fast_eu:5.0f}x)"
    )


if __name__ == "__main__":
    main()
