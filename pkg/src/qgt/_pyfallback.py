"""Pure-Python twins of the compiled kernels in ``_core.pyx``.

Used when the extension is not built or when ``QGT_BACKEND=python``. The DE
arithmetic uses the ``math`` module (libm) rather than numpy ufuncs, whose
vectorised exp/pow differ from libm in the last ulp.
"""
from math import exp, log, log1p, pow

import numpy as np

MODE_LDPC = 0
MODE_GLDPC = 1

UNRESOLVED, NONDEFECTIVE, DEFECTIVE = 0, 1, 2


def csr_transpose(row_ptr, row_adj, n_cols):
    row_adj = np.asarray(row_adj)
    counts = np.bincount(row_adj, minlength=n_cols)
    col_ptr = np.zeros(n_cols + 1, dtype=np.int32)
    np.cumsum(counts, out=col_ptr[1:])
    order = np.argsort(row_adj, kind="stable")
    owner = np.repeat(np.arange(len(row_ptr) - 1, dtype=np.int32), np.diff(row_ptr))
    return col_ptr, owner[order].astype(np.int32)


def _ready(mode, t, shortcut, s, d, k):
    if d == 0:
        return False
    if mode == 0:
        return s == 0 or s == d
    return k <= t or (shortcut and k == d)


def peel(vn_ptr, vn_adj, cn_ptr, cn_adj, truth, res_synd, res_deg, def_count, status,
         mode, t, shortcut, cn_lo, cn_hi):
    vn_ptr, vn_adj, cn_ptr, cn_adj = (a.tolist() for a in (vn_ptr, vn_adj, cn_ptr, cn_adj))
    truth_l = truth.tolist()
    s_l, d_l, k_l, st_l = res_synd.tolist(), res_deg.tolist(), def_count.tolist(), status.tolist()
    queued = set()
    cur = []
    for c in range(cn_lo, cn_hi):
        if _ready(mode, t, shortcut, s_l[c], d_l[c], k_l[c]):
            cur.append(c)
            queued.add(c)
    rounds = 0
    code = None
    while cur and code is None:
        peeled = False
        nxt = []
        for c in cur:
            queued.discard(c)
            if not _ready(mode, t, shortcut, s_l[c], d_l[c], k_l[c]):
                continue
            x = 0 if s_l[c] == 0 else 1
            for v in cn_adj[cn_ptr[c]:cn_ptr[c + 1]]:
                if st_l[v] != UNRESOLVED:
                    continue
                if mode != 0:
                    x = truth_l[v]
                st_l[v] = DEFECTIVE if x else NONDEFECTIVE
                peeled = True
                for c2 in vn_adj[vn_ptr[v]:vn_ptr[v + 1]]:
                    d_l[c2] -= 1
                    if x:
                        s_l[c2] -= 1
                        k_l[c2] -= 1
                    if mode == 0 and (s_l[c2] < 0 or s_l[c2] > d_l[c2]):
                        code = -1 - c2
                        break
                    if (cn_lo <= c2 < cn_hi and c2 not in queued
                            and _ready(mode, t, shortcut, s_l[c2], d_l[c2], k_l[c2])):
                        queued.add(c2)
                        nxt.append(c2)
                if code is not None:
                    break
            if code is not None:
                break
        if peeled:
            rounds += 1
        cur = nxt
    res_synd[:] = s_l
    res_deg[:] = d_l
    def_count[:] = k_l
    status[:] = st_l
    return rounds if code is None else code


def _ldpc_f0(gamma, dc, x):
    return exp((dc - 1) * log1p(-gamma * x))


def _ldpc_f1(gamma, dc, x):
    return exp((dc - 1) * log1p(-(1 - gamma) * x))


def _binom_cdf(lbinom, t, dc, x):
    if x <= 0.0:
        return 1.0
    if x >= 1.0:
        return 1.0 if t - 1 >= dc - 1 else 0.0
    acc = 0.0
    for i in range(t):
        acc += exp(lbinom[i] + i * log(x) + (dc - 1 - i) * log1p(-x))
    return acc


def _window_avg(vals, out, w, M):
    L = len(vals)
    res = []
    for tau in range(M):
        a = 0.0
        for j in range(w + 1):
            s = tau - j
            a += vals[s] if 0 <= s < L else out
        res.append(a / (w + 1))
    return res


def ldpc_step(p0, p1, q0, q1, gamma, dv, dc, w):
    L, M = len(p0), len(q0)
    f0 = [_ldpc_f0(gamma, dc, x) for x in p1.tolist()]
    f1 = [_ldpc_f1(gamma, dc, x) for x in p0.tolist()]
    nq0 = _window_avg(f0, _ldpc_f0(gamma, dc, 0.0), w, M)
    nq1 = _window_avg(f1, _ldpc_f1(gamma, dc, 0.0), w, M)
    np0, np1 = [], []
    for tau in range(L):
        a0 = 0.0
        a1 = 0.0
        for j in range(w + 1):
            a0 += pow(1.0 - nq0[tau + j], dv - 1.0)
            a1 += pow(1.0 - nq1[tau + j], dv - 1.0)
        np0.append(a0 / (w + 1))
        np1.append(a1 / (w + 1))
    q0[:], q1[:], p0[:], p1[:] = nq0, nq1, np0, np1


def gldpc_step(p, q, lbinom, gamma, dv, dc, t, w):
    L, M = len(p), len(q)
    lb = list(lbinom)
    f = [_binom_cdf(lb, t, dc, x) for x in p.tolist()]
    nq = _window_avg(f, _binom_cdf(lb, t, dc, 0.0), w, M)
    npv = []
    for tau in range(L):
        a = 0.0
        for j in range(w + 1):
            a += gamma * pow(1.0 - nq[tau + j], dv - 1.0)
        npv.append(a / (w + 1))
    q[:], p[:] = nq, npv


def _seqsum(values):
    acc = 0.0
    for x in values:
        acc += x
    return acc


def _run(step, arrays, max_iters, eps_success, eps_stall):
    # sequential sums, same order as the compiled loop
    prev = 0.0
    for a in arrays:
        prev += _seqsum(a.tolist())
    rise = 0.0
    for it in range(1, max_iters + 1):
        old = [a.tolist() for a in arrays]
        step()
        new = [a.tolist() for a in arrays]
        mass = 0.0
        top = 0.0
        for tau in range(len(new[0])):
            mass += new[0][tau] + new[1][tau] if len(new) == 2 else new[0][tau]
            for a, o in zip(new, old):
                top = max(top, a[tau])
                rise = max(rise, a[tau] - o[tau])
        if top < eps_success:
            return 1, it, rise
        if prev - mass < eps_stall:
            return 0, it, rise
        prev = mass
    return 2, max_iters, rise


def ldpc_run(p0, p1, q0, q1, gamma, dv, dc, w, max_iters, eps_success, eps_stall):
    return _run(lambda: ldpc_step(p0, p1, q0, q1, gamma, dv, dc, w),
                [p0, p1], max_iters, eps_success, eps_stall)


def gldpc_run(p, q, lbinom, gamma, dv, dc, t, w, max_iters, eps_success, eps_stall):
    return _run(lambda: gldpc_step(p, q, lbinom, gamma, dv, dc, t, w),
                [p], max_iters, eps_success, eps_stall)
