"""Time the compiled kernels against their pure-Python twins.

    python3 benchmarks/bench_backends.py [--repeats N]

Both backends are run on identical inputs and their outputs compared before
any timing is reported.
"""
import argparse
import sys
import timeit

import numpy as np

from cctext import _purepy, corpus, edgemap, imgproc, svm

try:
    from cctext import _speedups
except ImportError:
    sys.exit("the compiled extension is not built; run `pip install -e . --no-build-isolation` first")


def labelling_cases(rng):
    cases = []
    for w, h in ((200, 150), (400, 300), (800, 600)):
        img, _ = corpus.generate_image(rng, (w, h))
        edges = edgemap.edge_map(imgproc.preprocess(img)).edges
        cases.append((f"label_bfs {w}x{h}", (edges,)))
    return cases


def smo_cases(rng):
    cases = []
    for n in (100, 200, 400):
        x = rng.normal(size=(n, 20))
        y = np.where(x[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
        K = svm.rbf_matrix(x, x, 0.05)
        cases.append((f"smo_solve n={n}", (K, y, svm.box_bounds(y, 10.0), 1e-3, 1_000_000)))
    return cases


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=0, atol=1e-10)
    return abs(a - b) <= 1e-10


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    kernels = {"label_bfs": (_purepy.label_bfs, _speedups.label_bfs),
               "smo_solve": (_purepy.smo_solve, _speedups.smo_solve)}
    print(f"{'case':<24}{'python ms':>12}{'cython ms':>12}{'speed-up':>10}")
    for name, inputs in labelling_cases(rng) + smo_cases(rng):
        py, cy = kernels[name.split()[0]]
        if not same(py(*inputs), cy(*inputs)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        t_py = min(timeit.repeat(lambda: py(*inputs), number=1, repeat=args.repeats)) * 1e3
        t_cy = min(timeit.repeat(lambda: cy(*inputs), number=1, repeat=args.repeats)) * 1e3
        print(f"{name:<24}{t_py:>12.1f}{t_cy:>12.2f}{t_py / t_cy:>9.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
