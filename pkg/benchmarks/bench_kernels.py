"""Compiled vs pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Each row times one kernel call per backend and checks the two results agree.
"""
import argparse
import time

import numpy as np

from qgt._backend import available
from qgt.de import log_binom_prefix
from qgt.graph import sample_coupled, sample_regular
from qgt.instance import sample_defects, syndrome


def _peel_case(backend, g, x, counts, mode, t):
    st = np.zeros(g.n_vns, dtype=np.int8)
    synd = counts.copy()
    rounds = backend.peel(g.vn_ptr, g.vn_adj, g.cn_ptr, g.cn_adj, x, synd, g.cn_degrees().astype(np.int32),
                          counts.copy(), st, mode, t, False, 0, g.n_cns)
    return rounds, st


def cases():
    g = sample_regular(20_000, 3, 60, 1)
    x = sample_defects(g.n_vns, 0.004, 2).bits
    s = syndrome(g, x).counts
    yield "peel ldpc n=20000", lambda b: _peel_case(b, g, x, s, 0, 0)
    yield "peel gldpc t=2 n=20000", lambda b: _peel_case(b, g, x, s, 1, 2)
    gc = sample_coupled(600, 3, 60, 2, 20, 3)
    yield "csr_transpose coupled", lambda b: b.csr_transpose(gc.vn_ptr, gc.vn_adj, gc.n_cns)

    def ldpc_run(b, w=3, L=40):
        p0, p1 = np.ones(L), np.ones(L)
        q0, q1 = np.zeros(L + w), np.zeros(L + w)
        return b.ldpc_run(p0, p1, q0, q1, 0.0085, 5, 100, w, 100_000, 1e-10, 1e-15)

    def gldpc_run(b, w=2, L=30):
        p, q = np.ones(L), np.zeros(L + w)
        return b.gldpc_run(p, q, log_binom_prefix(840, 2), 0.004, 2, 840, 2, w, 100_000, 1e-10, 1e-15)

    yield "ldpc DE dv=5 w=3 L=40", ldpc_run
    yield "gldpc DE t=2 w=2 L=30", gldpc_run


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available()
    names = list(backends)
    print(f"{'case':28s}" + "".join(f"{n:>12s}" for n in names) + "   speedup  agree")
    for label, fn in cases():
        times, outs = [], []
        for n in names:
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = fn(backends[n])
                best = min(best, time.perf_counter() - t0)
            times.append(best)
            outs.append(out)
        speed = times[-1] / times[0] if len(times) > 1 else 1.0
        agree = all(_same(outs[0], o) for o in outs[1:])
        print(f"{label:28s}" + "".join(f"{t:11.4f}s" for t in times) + f"  {speed:7.1f}x  {agree}")


if __name__ == "__main__":
    main()
