"""Time the numba kernels against their numpy fallbacks.

Each backend runs in its own interpreter because the choice is fixed at
import time by TREEGROUPS_NO_NUMBA.  Numba timings exclude compilation:
every kernel is called once on a small input before the clock starts.

    python benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import treegroups
from treegroups import builtin, quotient, stochastic
from treegroups.words import AutomatonGroup

repeat = int(sys.argv[1])
G = AutomatonGroup(builtin("gamma"))

def best(fn):
    fn_small = fn(True)
    fn_small()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(False)()
        times.append(time.perf_counter() - t0)
    return min(times)

def chain(small):
    n = 6 if small else 10
    perms = [G.word_perm((c,), n) for c in (1, 2)]
    return lambda: quotient.tree_chain(perms, n).order

def sums(small):
    n, s = (50, 8) if small else (20000, 500)
    return lambda: stochastic.child_sums(G, n, s, seed=1)

def scan(small):
    lv, nmax = (4, 4) if small else (10, 10)
    by_code = G.level_perms(lv)
    perms = np.array([by_code[c] for c in (1, -1, 2, -2)], dtype=np.int64)
    return lambda: stochastic._scan(perms, nmax, 1_000_000)

out = {"backend": treegroups.backend()}
for name, fn in [("tree_chain level 10", chain), ("child_sums 500 x 20000", sums),
                 ("cogrowth scan length 10", scan)]:
    out[name] = best(fn)
print(json.dumps(out))
"""


def run(no_numba, repeat):
    env = dict(os.environ)
    env.pop("TREEGROUPS_NO_NUMBA", None)
    if no_numba:
        env["TREEGROUPS_NO_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    if fast["backend"] != "numba":
        print("numba is not installed; both runs used the numpy path")
    print(f"{'kernel':28s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:28s} {fast[key]:10.4f} {slow[key]:10.4f} {slow[key] / fast[key]:8.1f}")


if __name__ == "__main__":
    main()
