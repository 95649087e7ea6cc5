"""Time one batched training rollout with the compiled and NumPy kernels.

    python3 benchmarks/bench_kernel.py [--scenario basic-linear] [--m 34 136] [--repeat 3]

Both backends fly the same parameters; the script also reports the largest
difference in per-agent returns so a speedup never hides a wrong answer.
"""

import argparse
import json
import time
from unittest import mock

import numpy as np

from nces_formation import _kernel_py, kernel
from nces_formation.policy import Layout
from nces_formation.rollout import simulate
from nces_formation.scenarios import get_scenario


def backends():
    out = {"python": _kernel_py.step_batch}
    try:
        from nces_formation import _kernel

        out["cython"] = _kernel.step_batch
    except ImportError:
        pass
    return out


def time_backend(fn, spec, params, repeat):
    with mock.patch.object(kernel, "step_batch", fn):
        simulate(spec, params[:1], aggregation="min")  # warm-up
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            res = simulate(spec, params, aggregation="off")
            best = min(best, time.perf_counter() - t0)
    return best, res.returns


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", default="basic-linear")
    ap.add_argument("--m", type=int, nargs="+", default=[34, 136])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    spec = get_scenario(args.scenario)
    s = Layout.for_scenario(spec.with_switch_signal).size
    rng = np.random.default_rng(0)
    rows = []
    for m in args.m:
        params = 0.1 * rng.standard_normal((m, spec.n_missiles, s))
        timings, returns = {}, {}
        for name, fn in backends().items():
            timings[name], returns[name] = time_backend(fn, spec, params, args.repeat)
        row = {"scenario": spec.name, "m": m, "steps": spec.n_steps,
               **{f"{k}_s": round(v, 4) for k, v in timings.items()}}
        if "cython" in timings:
            row["speedup"] = round(timings["python"] / timings["cython"], 2)
            row["max_return_diff"] = float(np.abs(returns["python"] - returns["cython"]).max())
        rows.append(row)
        print(json.dumps(row))


if __name__ == "__main__":
    main()
