"""Peeling decoders for quantitative group testing.

LDPC mode works from the syndrome alone: a CN whose residual syndrome is 0
clears all its unresolved items, one whose residual syndrome equals its
residual degree marks them all defective. GLDPC mode models a CN that can
identify up to ``t`` unresolved defectives; the count it acts on is read from
the ground truth, which is exactly what the bundle's all-ones test plus the
BCH syndrome deliver in the noiseless model.

The fast path is a worklist (``_backend.kernels.peel``); ``peel_reference``
is an independent full-rescan implementation kept as a test oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qgt._backend import kernels
from qgt.errors import IntegrityError, ParameterError
from qgt.graph import BipartiteGraph
from qgt.instance import DefectVector, Syndrome, syndrome as compute_syndrome

UNRESOLVED, NONDEFECTIVE, DEFECTIVE = 0, 1, 2
MODES = ("ldpc", "gldpc")


@dataclass
class PeelingState:
    residual_syndrome: np.ndarray
    residual_degree: np.ndarray
    unresolved_defective_count: np.ndarray
    vn_status: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, graph: BipartiteGraph, counts) -> PeelingState:
        counts = np.array(counts, dtype=np.int32)
        return cls(
            residual_syndrome=counts,
            residual_degree=graph.cn_degrees().astype(np.int32),
            unresolved_defective_count=counts.copy(),
            vn_status=np.zeros(graph.n_vns, dtype=np.int8),
        )

    @property
    def resolved(self) -> np.ndarray:
        return self.vn_status != UNRESOLVED


@dataclass
class DecodeResult:
    success: bool
    misdetected: int | None
    false_alarms: int | None
    iterations: int
    n_defective: int | None
    state: PeelingState
    meta: dict = field(default_factory=dict)


def _truth_bits(defects, n):
    if defects is None:
        return None
    bits = defects.bits if isinstance(defects, DefectVector) else np.asarray(defects, dtype=np.int8)
    if len(bits) != n:
        raise ParameterError(f"defect vector has length {len(bits)}, graph has {n} VNs")
    return np.ascontiguousarray(bits, dtype=np.int8)


def _finish(state, truth, rounds, meta=None) -> DecodeResult:
    success = bool(state.resolved.all())
    state.iteration = rounds + (0 if success else 1)
    if truth is None:
        mis = fa = nd = None
    else:
        st = state.vn_status
        nd = int(np.count_nonzero(truth))
        mis = int(np.count_nonzero((st == UNRESOLVED) & (truth == 1)))
        fa = int(np.count_nonzero(((st == DEFECTIVE) & (truth == 0)) | ((st == NONDEFECTIVE) & (truth == 1))))
    return DecodeResult(success, mis, fa, state.iteration, nd, state, meta or {})


def _check_syndrome(graph, counts):
    counts = np.asarray(counts)
    if len(counts) != graph.n_cns:
        raise ParameterError(f"syndrome has length {len(counts)}, graph has {graph.n_cns} CNs")
    bad = np.flatnonzero((counts < 0) | (counts > graph.cn_degrees()))
    if len(bad):
        raise IntegrityError(f"CN {bad[0]}: syndrome {counts[bad[0]]} outside [0, degree]")


def _check_t(graph, t, allow_degenerate):
    if t < 1:
        raise ParameterError("GLDPC peeling needs t >= 1")
    dc = graph.params.get("dc") or int(graph.cn_degrees().max(initial=0))
    if t >= dc and not allow_degenerate:
        raise ParameterError(f"t = {t} >= dc = {dc}: every CN resolves at once (pass allow_degenerate)")


def _run_kernel(graph, state, truth, mode, t, exploit_full, lo, hi):
    rounds = kernels.peel(
        graph.vn_ptr, graph.vn_adj, graph.cn_ptr, graph.cn_adj,
        truth,
        state.residual_syndrome, state.residual_degree, state.unresolved_defective_count,
        state.vn_status,
        0 if mode == "ldpc" else 1, int(t), bool(exploit_full), int(lo), int(hi),
    )
    if rounds < 0:
        raise IntegrityError(f"CN {-1 - rounds}: residual syndrome left [0, residual degree]")
    return rounds


def _setup(graph, data, mode, t, truth, allow_degenerate):
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}")
    if mode == "ldpc":
        if isinstance(data, Syndrome):
            counts = data.counts
            truth = _truth_bits(truth, graph.n_vns)
        else:
            truth = _truth_bits(data if truth is None else truth, graph.n_vns)
            counts = compute_syndrome(graph, truth).counts
        _check_syndrome(graph, counts)
        kernel_truth = truth if truth is not None else np.zeros(graph.n_vns, dtype=np.int8)
    else:
        _check_t(graph, t, allow_degenerate)
        truth = _truth_bits(data, graph.n_vns)
        counts = compute_syndrome(graph, truth).counts
        kernel_truth = truth
    return PeelingState.initial(graph, counts), truth, kernel_truth


def peel_ldpc(graph: BipartiteGraph, syndrome, truth=None) -> DecodeResult:
    """Decode from a syndrome; ``truth`` (optional) only feeds the error counts."""
    state, truth, kt = _setup(graph, syndrome, "ldpc", 0, truth, False)
    return _finish(state, truth, _run_kernel(graph, state, kt, "ldpc", 0, False, 0, graph.n_cns))


def peel_gldpc(graph: BipartiteGraph, defects, t: int, allow_degenerate: bool = False,
               exploit_full: bool = False) -> DecodeResult:
    """Idealised GLDPC peeling with correction radius ``t``.

    ``exploit_full`` (off by default, experimental) also lets a CN whose
    unresolved items are all defective resolve them, as in LDPC mode.
    """
    state, truth, kt = _setup(graph, defects, "gldpc", t, None, allow_degenerate)
    return _finish(state, truth, _run_kernel(graph, state, kt, "gldpc", t, exploit_full, 0, graph.n_cns))


def window_decode(graph: BipartiteGraph, data, mode: str, W: int, t: int = 0, truth=None,
                  allow_degenerate: bool = False, exploit_full: bool = False) -> DecodeResult:
    """Sliding-window decoding of a coupled chain, stride one position.

    Window tau0 = 1..L activates the CNs at positions tau0..tau0+W-1 and peels
    to stall; resolutions are permanent and positions left of the window are
    never revisited. W = L + w is equivalent to full-chain decoding.
    """
    if not graph.coupled:
        raise ParameterError("window decoding needs a coupled graph")
    L, w = graph.params["L"], graph.params["w"]
    if not 1 <= W <= L + w:
        raise ParameterError(f"window size must lie in [1, L+w] = [1, {L + w}], got {W}")
    state, truth, kt = _setup(graph, data, mode, t, truth, allow_degenerate)
    rounds = 0
    for tau0 in range(1, L + 1):
        lo, hi = graph.cn_range(tau0, tau0 + W - 1)
        rounds += _run_kernel(graph, state, kt, mode, t, exploit_full, lo, hi)
    meta = {"W": W, "stride": 1, "latency_items": graph.params.get("nb", 0) * W}
    return _finish(state, truth, rounds, meta)


def decode(graph, defects, mode, t=0, W=None, exploit_full=False) -> DecodeResult:
    """Full-chain (W=None) or window decoding of a known defect vector."""
    if W is not None:
        return window_decode(graph, defects, mode, W, t=t, exploit_full=exploit_full)
    if mode == "ldpc":
        return peel_ldpc(graph, compute_syndrome(graph, defects), truth=defects)
    return peel_gldpc(graph, defects, t, exploit_full=exploit_full)


def peel_reference(graph: BipartiteGraph, data, mode: str, t: int = 0, truth=None,
                   exploit_full: bool = False) -> DecodeResult:
    """Naive sweep decoder: every sweep rescans all CNs and recomputes residuals
    from the VN statuses. Meant for small graphs."""
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}")
    cn_nbrs = [graph.cn_neighbors(i).tolist() for i in range(graph.n_cns)]
    if mode == "ldpc":
        if isinstance(data, Syndrome):
            s = data.counts.tolist()
            truth = _truth_bits(truth, graph.n_vns)
        else:
            truth = _truth_bits(data, graph.n_vns)
            s = compute_syndrome(graph, truth).counts.tolist()
        _check_syndrome(graph, s)
    else:
        _check_t(graph, t, True)
        truth = _truth_bits(data, graph.n_vns)
    tv = None if truth is None else truth.tolist()
    status = [UNRESOLVED] * graph.n_vns
    sweeps = 0
    while True:
        sweeps += 1
        peeled = False
        for c, nb in enumerate(cn_nbrs):
            open_ = [v for v in nb if status[v] == UNRESOLVED]
            if not open_:
                continue
            d = len(open_)
            if mode == "ldpc":
                r = s[c] - sum(1 for v in nb if status[v] == DEFECTIVE)
                if r < 0 or r > d:
                    raise IntegrityError(f"CN {c}: residual syndrome {r} outside [0, {d}]")
                if r == 0:
                    val = [NONDEFECTIVE] * d
                elif r == d:
                    val = [DEFECTIVE] * d
                else:
                    continue
            else:
                k = sum(tv[v] for v in open_)
                if not (k <= t or (exploit_full and k == d)):
                    continue
                val = [DEFECTIVE if tv[v] else NONDEFECTIVE for v in open_]
            for v, x in zip(open_, val):
                status[v] = x
            peeled = True
        if not peeled or all(x != UNRESOLVED for x in status):
            break
    st = np.array(status, dtype=np.int8)
    open_mask = (st == UNRESOLVED).astype(np.int8)
    degree = compute_syndrome(graph, open_mask).counts
    if mode == "ldpc":
        res = np.asarray(s, dtype=np.int32) - compute_syndrome(graph, (st == DEFECTIVE).astype(np.int8)).counts
    else:
        res = compute_syndrome(graph, truth * open_mask).counts
    state = PeelingState(res, degree, res.copy(), st)
    out = _finish(state, truth, 0)
    out.iterations = state.iteration = sweeps
    return out
