"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter, since the choice is made at import
time from ALPHATREE_DISABLE_NUMBA. Results of every workload are hashed so the
two paths can be compared for agreement as well as speed.

    python benchmarks/bench_backends.py [--repeat 3] [--quick]
"""
import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import hashlib, json, sys, time
import numpy as np
from alphatree import backend, grow, sample_environment
from alphatree.dimensions import environment_return_curve, walk_graph, walker_return_probabilities
from alphatree.limit import SpineEnvironment
from alphatree.rng import make_rng
from alphatree.tree import PlanarTree, ball_code

quick, repeat = sys.argv[1] == "1", int(sys.argv[2])
n = 10**5 if quick else 10**6
tmax = 256 if quick else 1024

def digest(x):
    if isinstance(x, np.ndarray):
        x = np.round(x, 12).tobytes()
    return hashlib.sha256(x if isinstance(x, bytes) else str(x).encode()).hexdigest()[:12]

big = grow(n, 0.5, 1)
code = big.to_planar()
env = SpineEnvironment(0.5, 3, 0, 10**6).extend(tmax // 2)
graph = walk_graph(PlanarTree(env.ball_code(tmax // 2 + 1)), tmax // 2 + 1)

work = {
    "grow": lambda: grow(n, 0.5, 1).n,
    "depths": lambda: grow(n, 0.5, 1).leaf_depths(),
    "encode": lambda: big.to_planar().code,
    "vertex_depths": lambda: PlanarTree(code.code).vertex_depths,
    "ball_code": lambda: ball_code(code, 40),
    "environments": lambda: [sample_environment(0.5, 2, 5, i, 10**6).ball_code(3) for i in range(300)],
    "return_dp": lambda: environment_return_curve(SpineEnvironment(0.5, 3, 0, 10**6), tmax, radius=tmax // 2 + 1).p,
    "walkers": lambda: walker_return_probabilities(graph, tmax, 200, make_rng(0, "walkers", 0)),
}
out = {"backend": backend(), "n": n, "tmax": tmax, "results": {}}
for name, fn in work.items():
    result = fn()  # warm-up, includes compilation
    best = min((lambda t0: (fn(), time.perf_counter() - t0)[1])(time.perf_counter()) for _ in range(repeat))
    out["results"][name] = {"seconds": best, "digest": digest(result)}
print(json.dumps(out))
"""


def run(disable: bool, quick: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["ALPHATREE_DISABLE_NUMBA"] = "1"
    else:
        env.pop("ALPHATREE_DISABLE_NUMBA", None)
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-c", WORKER, "1" if quick else "0", str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    res = json.loads(proc.stdout)
    res["wall"] = time.perf_counter() - t0
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    fast = run(False, args.quick, args.repeat)
    slow = run(True, args.quick, args.repeat)
    if args.json:
        print(json.dumps({"numba": fast, "numpy": slow}, indent=2))
        return
    print(f"n = {fast['n']}, tmax = {fast['tmax']}, best of {args.repeat}")
    print(f"{'workload':<15}{fast['backend']:>10}{slow['backend']:>10}{'speedup':>9}  same")
    for name, a in fast["results"].items():
        b = slow["results"][name]
        same = "yes" if a["digest"] == b["digest"] else "no"
        print(f"{name:<15}{a['seconds']:>10.4f}{b['seconds']:>10.4f}{b['seconds'] / a['seconds']:>9.1f}  {same}")


if __name__ == "__main__":
    main()
