"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Both
backends receive identical inputs; results are checked to agree before
timing.
"""
import argparse
import timeit

import numpy as np

from rrcguard import nn
from rrcguard._kernels import _pykernels

try:
    from rrcguard._kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(model, X, batch):
    Ws, bs, acts = model._Ws, model._bs, model._acts
    return {
        "forward_batch (n=400)": lambda k: k.forward_batch(Ws, bs, acts, X),
        "distance_and_grad (n=400)": lambda k: k.distance_and_grad(Ws, bs, acts, X),
        # copies keep the weights fixed across repeats
        "train_step (batch=16)": lambda k: k.train_step([W.copy() for W in Ws], [b.copy() for b in bs],
                                                        acts, batch, 0.01),
        "distance_and_grad (n=1)": lambda k: k.distance_and_grad(Ws, bs, acts, X[:1]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args(argv)

    model = nn.build_autoencoder(seed=0)
    X = np.random.default_rng(0).random((400, 5))
    batch = X[:16].copy()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name, _ in backends) + ("     speedup" if _ckernels else ""))
    for label, fn in cases(model, X, batch).items():
        if _ckernels is not None:
            a, b = fn(_pykernels), fn(_ckernels)
            for u, v in zip(np.atleast_1d(a) if not isinstance(a, tuple) else a,
                            np.atleast_1d(b) if not isinstance(b, tuple) else b):
                np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-12)
        us = [timeit.timeit(lambda: fn(k), number=args.repeat) / args.repeat * 1e6 for _, k in backends]
        row = f"{label:<28}" + "".join(f"{t:>10.2f}us" for t in us)
        if len(us) == 2:
            row += f"{us[0] / us[1]:>11.2f}x"
        print(row)


if __name__ == "__main__":
    main()
