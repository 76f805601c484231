# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: peeling worklist, density-evolution loops, CSR transpose.

Every function here has a line-for-line twin in ``_pyfallback`` with the same
signature. The DE arithmetic is kept expression-identical to the scalar
reference steps in ``qgt.de`` so that uncoupled and w=0 coupled trajectories
agree bit for bit.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, pow

cnp.import_array()

cdef enum:
    UNRESOLVED = 0
    NONDEFECTIVE = 1
    DEFECTIVE = 2

MODE_LDPC = 0
MODE_GLDPC = 1


def csr_transpose(const int[::1] row_ptr, const int[::1] row_adj, int n_cols):
    """Column-major view of a CSR incidence structure (counting sort, stable)."""
    cdef Py_ssize_t n_rows = row_ptr.shape[0] - 1
    cdef Py_ssize_t n_edges = row_adj.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] col_ptr_a = np.zeros(n_cols + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] col_adj_a = np.empty(n_edges, dtype=np.int32)
    cdef int[::1] col_ptr = col_ptr_a
    cdef int[::1] col_adj = col_adj_a
    cdef int[::1] fill = np.empty(n_cols, dtype=np.int32)
    cdef Py_ssize_t r, e, c
    for e in range(n_edges):
        col_ptr[row_adj[e] + 1] += 1
    for c in range(n_cols):
        col_ptr[c + 1] += col_ptr[c]
        fill[c] = col_ptr[c]
    for r in range(n_rows):
        for e in range(row_ptr[r], row_ptr[r + 1]):
            c = row_adj[e]
            col_adj[fill[c]] = <int>r
            fill[c] += 1
    return col_ptr_a, col_adj_a


cdef inline bint _ready(int mode, int t, bint shortcut, int s, int d, int k) nogil:
    if d == 0:
        return False
    if mode == 0:
        return s == 0 or s == d
    return k <= t or (shortcut and k == d)


def peel(const int[::1] vn_ptr, const int[::1] vn_adj,
         const int[::1] cn_ptr, const int[::1] cn_adj,
         const signed char[::1] truth,
         int[::1] res_synd, int[::1] res_deg, int[::1] def_count,
         signed char[::1] status,
         int mode, int t, bint shortcut, int cn_lo, int cn_hi):
    """Run peeling to stall on CNs in [cn_lo, cn_hi); state arrays are updated in place.

    Returns the number of productive rounds, or -1 - c when CN c ends up with
    a residual syndrome outside [0, residual degree] (LDPC mode only).
    """
    cdef Py_ssize_t n_cns = cn_ptr.shape[0] - 1
    cdef int[::1] cur = np.empty(max(n_cns, 1), dtype=np.int32)
    cdef int[::1] nxt = np.empty(max(n_cns, 1), dtype=np.int32)
    cdef signed char[::1] queued = np.zeros(max(n_cns, 1), dtype=np.int8)
    cdef int[::1] swap
    cdef Py_ssize_t n_cur = 0, n_nxt = 0, i, e, f
    cdef int c, c2, v, x, rounds = 0
    cdef bint peeled

    for c in range(cn_lo, cn_hi):
        if _ready(mode, t, shortcut, res_synd[c], res_deg[c], def_count[c]):
            cur[n_cur] = c
            n_cur += 1
            queued[c] = 1

    while n_cur > 0:
        peeled = False
        n_nxt = 0
        for i in range(n_cur):
            c = cur[i]
            queued[c] = 0
            if not _ready(mode, t, shortcut, res_synd[c], res_deg[c], def_count[c]):
                continue
            if mode == 0:
                x = 0 if res_synd[c] == 0 else 1
            for e in range(cn_ptr[c], cn_ptr[c + 1]):
                v = cn_adj[e]
                if status[v] != UNRESOLVED:
                    continue
                if mode != 0:
                    x = truth[v]
                status[v] = DEFECTIVE if x else NONDEFECTIVE
                peeled = True
                for f in range(vn_ptr[v], vn_ptr[v + 1]):
                    c2 = vn_adj[f]
                    res_deg[c2] -= 1
                    if x:
                        res_synd[c2] -= 1
                        def_count[c2] -= 1
                    if mode == 0 and (res_synd[c2] < 0 or res_synd[c2] > res_deg[c2]):
                        return -1 - c2
                    if (c2 >= cn_lo and c2 < cn_hi and not queued[c2]
                            and _ready(mode, t, shortcut, res_synd[c2], res_deg[c2], def_count[c2])):
                        queued[c2] = 1
                        nxt[n_nxt] = c2
                        n_nxt += 1
        if peeled:
            rounds += 1
        swap = cur
        cur = nxt
        nxt = swap
        n_cur = n_nxt
    return rounds


# ---------------------------------------------------------------- density evolution

cdef inline double _ldpc_f0(double gamma, int dc, double x) nogil:
    return exp((dc - 1) * log1p(-gamma * x))


cdef inline double _ldpc_f1(double gamma, int dc, double x) nogil:
    return exp((dc - 1) * log1p(-(1 - gamma) * x))


cdef inline double _binom_cdf(const double[::1] lbinom, int t, int dc, double x) nogil:
    # P[Bino(dc-1, x) <= t-1], terms summed in log space
    cdef int i
    cdef double acc = 0.0
    if x <= 0.0:
        return 1.0
    if x >= 1.0:
        return 1.0 if t - 1 >= dc - 1 else 0.0
    for i in range(t):
        acc += exp(lbinom[i] + i * log(x) + (dc - 1 - i) * log1p(-x))
    return acc


cdef void _ldpc_step(double[::1] p0, double[::1] p1, double[::1] q0, double[::1] q1,
                     double[::1] f0, double[::1] f1,
                     double gamma, int dv, int dc, int w) noexcept nogil:
    cdef Py_ssize_t L = p0.shape[0], M = q0.shape[0], tau, j, s
    cdef double a0, a1
    cdef double out0 = _ldpc_f0(gamma, dc, 0.0), out1 = _ldpc_f1(gamma, dc, 0.0)
    for s in range(L):
        f0[s] = _ldpc_f0(gamma, dc, p1[s])
        f1[s] = _ldpc_f1(gamma, dc, p0[s])
    for tau in range(M):
        a0 = 0.0
        a1 = 0.0
        for j in range(w + 1):
            s = tau - j
            if 0 <= s < L:
                a0 += f0[s]
                a1 += f1[s]
            else:
                a0 += out0
                a1 += out1
        q0[tau] = a0 / (w + 1)
        q1[tau] = a1 / (w + 1)
    for tau in range(L):
        a0 = 0.0
        a1 = 0.0
        for j in range(w + 1):
            a0 += pow(1.0 - q0[tau + j], dv - 1.0)
            a1 += pow(1.0 - q1[tau + j], dv - 1.0)
        p0[tau] = a0 / (w + 1)
        p1[tau] = a1 / (w + 1)


cdef void _gldpc_step(double[::1] p, double[::1] q, double[::1] f, const double[::1] lbinom,
                      double gamma, int dv, int dc, int t, int w) noexcept nogil:
    cdef Py_ssize_t L = p.shape[0], M = q.shape[0], tau, j, s
    cdef double a, out = _binom_cdf(lbinom, t, dc, 0.0)
    for s in range(L):
        f[s] = _binom_cdf(lbinom, t, dc, p[s])
    for tau in range(M):
        a = 0.0
        for j in range(w + 1):
            s = tau - j
            if 0 <= s < L:
                a += f[s]
            else:
                a += out
        q[tau] = a / (w + 1)
    for tau in range(L):
        a = 0.0
        for j in range(w + 1):
            a += gamma * pow(1.0 - q[tau + j], dv - 1.0)
        p[tau] = a / (w + 1)


def ldpc_step(double[::1] p0, double[::1] p1, double[::1] q0, double[::1] q1,
              double gamma, int dv, int dc, int w):
    """One LDPC DE iteration in place: CN update from p, then VN update from q."""
    cdef double[::1] f0 = np.empty(p0.shape[0])
    cdef double[::1] f1 = np.empty(p0.shape[0])
    _ldpc_step(p0, p1, q0, q1, f0, f1, gamma, dv, dc, w)


def gldpc_step(double[::1] p, double[::1] q, const double[::1] lbinom,
               double gamma, int dv, int dc, int t, int w):
    cdef double[::1] f = np.empty(p.shape[0])
    _gldpc_step(p, q, f, lbinom, gamma, dv, dc, t, w)


cdef inline double _sum(double[::1] a) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i]
    return s


def ldpc_run(double[::1] p0, double[::1] p1, double[::1] q0, double[::1] q1,
             double gamma, int dv, int dc, int w,
             long max_iters, double eps_success, double eps_stall):
    """Iterate to convergence, stall, or the iteration cap.

    Returns (outcome, iterations, max_increase) with outcome 1 = converged,
    0 = stalled, 2 = cap reached.
    """
    cdef Py_ssize_t L = p0.shape[0], tau
    cdef double[::1] f0 = np.empty(L)
    cdef double[::1] f1 = np.empty(L)
    cdef double[::1] old0 = np.empty(L)
    cdef double[::1] old1 = np.empty(L)
    cdef double mass, prev = _sum(p0) + _sum(p1), top, rise = 0.0
    cdef long it, done = max_iters
    cdef int outcome = 2
    with nogil:
        for it in range(1, max_iters + 1):
            old0[:] = p0
            old1[:] = p1
            _ldpc_step(p0, p1, q0, q1, f0, f1, gamma, dv, dc, w)
            mass = 0.0
            top = 0.0
            for tau in range(L):
                mass += p0[tau] + p1[tau]
                if p0[tau] > top:
                    top = p0[tau]
                if p1[tau] > top:
                    top = p1[tau]
                if p0[tau] - old0[tau] > rise:
                    rise = p0[tau] - old0[tau]
                if p1[tau] - old1[tau] > rise:
                    rise = p1[tau] - old1[tau]
            if top < eps_success:
                outcome, done = 1, it
                break
            if prev - mass < eps_stall:
                outcome, done = 0, it
                break
            prev = mass
    return outcome, done, rise


def gldpc_run(double[::1] p, double[::1] q, const double[::1] lbinom,
              double gamma, int dv, int dc, int t, int w,
              long max_iters, double eps_success, double eps_stall):
    cdef Py_ssize_t L = p.shape[0], tau
    cdef double[::1] f = np.empty(L)
    cdef double[::1] old = np.empty(L)
    cdef double mass, prev = _sum(p), top, rise = 0.0
    cdef long it, done = max_iters
    cdef int outcome = 2
    with nogil:
        for it in range(1, max_iters + 1):
            old[:] = p
            _gldpc_step(p, q, f, lbinom, gamma, dv, dc, t, w)
            mass = 0.0
            top = 0.0
            for tau in range(L):
                mass += p[tau]
                if p[tau] > top:
                    top = p[tau]
                if p[tau] - old[tau] > rise:
                    rise = p[tau] - old[tau]
            if top < eps_success:
                outcome, done = 1, it
                break
            if prev - mass < eps_stall:
                outcome, done = 0, it
                break
            prev = mass
    return outcome, done, rise
