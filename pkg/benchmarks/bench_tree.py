"""Compare the compiled and pure-Python tree kernels.

    python3 benchmarks/bench_tree.py --samples 9000 --trees 10 --repeat 3

Both kernels must grow identical trees; the script checks this before timing.
"""

import argparse
import time

from kqipredict.dataset import FEATURE_NAMES, to_matrix
from kqipredict.regression import _backend
from kqipredict.regression.tree import find_best_split, train_forest, train_tree
from kqipredict.simulator import GeneratorParams, default_grid, run_campaign


def best_of(repeat, func):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=9000)
    parser.add_argument("--trees", type=int, default=10)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--target", default="tftd_s")
    args = parser.parse_args(argv)

    if _backend.compiled is None:
        parser.exit(1, "compiled kernel not built; run `pip install -e . --no-build-isolation`\n")

    data = run_campaign(default_grid(), GeneratorParams(), args.samples, seed=0)
    X, y = to_matrix(data, FEATURE_NAMES, args.target)
    assert train_tree(X, y, backend="python").equals(train_tree(X, y, backend="cython"))

    cases = {
        "root split": lambda b: find_best_split(X, y, backend=b),
        "tree (leaf 25)": lambda b: train_tree(X, y, backend=b),
        "tree (leaf 1)": lambda b: train_tree(X, y, max_depth=None, min_samples_leaf=1, backend=b),
        f"forest ({args.trees} trees)": lambda b: train_forest(X, y, n_trees=args.trees, backend=b),
    }
    print(f"n={len(y)} p={X.shape[1]} target={args.target}, best of {args.repeat}")
    print(f"{'case':<22}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, run in cases.items():
        py = best_of(args.repeat, lambda: run("python"))
        cy = best_of(args.repeat, lambda: run("cython"))
        print(f"{name:<22}{py:>12.4f}{cy:>12.4f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
