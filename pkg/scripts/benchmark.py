"""Single-threaded throughput of canonicalization and Morgan fingerprints.

    python scripts/benchmark.py --n 5000
    CHEMTUNE_PURE_PYTHON=1 python scripts/benchmark.py   # without the extension
"""

import argparse
import random
import time

from chemtune._accel import FAST
from chemtune.canon import canonical_smiles
from chemtune.descriptors import morgan_fingerprint, path_fingerprint
from chemtune.generate import molecule_set, random_rewrite


def rate(fn, inputs, repeat):
    best = 0.0
    for _ in range(repeat):
        t = time.perf_counter()
        for s in inputs:
            fn(s)
        best = max(best, len(inputs) / (time.perf_counter() - t))
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="distinct molecules")
    ap.add_argument("--rewrites", type=int, default=3, help="atom-order rewrites per molecule")
    ap.add_argument("--max-heavy", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    mols = molecule_set(args.n, seed=args.seed, max_heavy=args.max_heavy)
    rng = random.Random(args.seed)
    inputs = [random_rewrite(s, rng) for s in mols for _ in range(args.rewrites)]
    print(f"extension: {'on' if FAST is not None else 'off'}, {len(inputs)} inputs")
    for name, fn in [("canonical_smiles", canonical_smiles), ("morgan", morgan_fingerprint), ("path", path_fingerprint)]:
        print(f"{name:18s} {rate(fn, inputs, args.repeat):12,.0f} mol/s")


if __name__ == "__main__":
    main()
