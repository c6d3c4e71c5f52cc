"""Compare the compiled kernels with their pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints per-kernel best-of-N timings and the speedup, then times one
end-to-end identification bench row under each backend (subprocess with
RINGID_PURE_PYTHON set for the fallback).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ringid import _pykernels
from ringid.rng import Rng

try:
    from ringid import _ckernels
except ImportError:
    _ckernels = None


def cases():
    state = Rng(1).state
    src = np.random.default_rng(0).normal(size=(64, 64))
    refs = np.random.default_rng(1).normal(size=(2048, 572))
    x = np.random.default_rng(2).normal(size=572)
    rot = (-11.0, 0.26, 0.97, 20.0, -0.97, 0.26)

    def u64(mod):
        return lambda: mod.xoshiro_fill_u64(state.copy(), np.empty(4096, dtype=np.uint64))

    def normal(mod):
        return lambda: mod.xoshiro_fill_normal(state.copy(), np.empty(4 * 64 * 64))

    def bilinear(mod):
        out = np.empty_like(src)
        return lambda: mod.affine_bilinear(src, out, *rot, False)

    def l1(mod):
        out = np.empty(2048)
        return lambda: mod.l1_rows(refs, x, 0.85, out)

    return [("xoshiro u64 x4096", u64), ("normal 4x64x64", normal),
            ("bilinear warp 64x64", bilinear), ("l1 2048 keys x 572", l1)]


def best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


END_TO_END = (
    "import time;from ringid.imprint import WatermarkConfig,build_keyset;"
    "from ringid.evaluation import identification_bench;from ringid.attacks import ChannelModel,parse_attacks;"
    "ks=build_keyset(128,WatermarkConfig(),1);t=time.perf_counter();"
    "identification_bench(ks,ChannelModel(0.1,tuple(parse_attacks('rotate=75')),0),128,50,2);"
    "print(time.perf_counter()-t)"
)


def end_to_end(pure):
    env = dict(os.environ)
    if pure:
        env["RINGID_PURE_PYTHON"] = "1"
    else:
        env.pop("RINGID_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    print(f"{'kernel':24s} {'cython':>12s} {'python':>12s} {'speedup':>9s}")
    for name, make in cases():
        tc = best(make(_ckernels), args.repeat)
        tp = best(make(_pykernels), args.repeat)
        print(f"{name:24s} {tc * 1e6:10.1f}us {tp * 1e6:10.1f}us {tp / tc:8.1f}x")
    if not args.skip_end_to_end:
        tc, tp = end_to_end(False), end_to_end(True)
        print(f"{'bench row (50 trials)':24s} {tc:11.2f}s {tp:11.2f}s {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
