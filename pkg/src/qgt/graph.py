"""Bipartite pooling graphs.

Items are variable nodes (VNs), tests or test bundles are constraint nodes
(CNs). Adjacency is stored twice in CSR form (VN-major and CN-major) as
read-only int32 arrays. Coupled graphs number their CNs position by
position, so the CNs at a range of positions form a contiguous index range.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qgt._backend import kernels
from qgt.errors import ParameterError, SamplingError


def _frozen(a, dtype=np.int32):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    n_vns: int
    n_cns: int
    vn_ptr: np.ndarray
    vn_adj: np.ndarray
    cn_ptr: np.ndarray
    cn_adj: np.ndarray
    vn_position: np.ndarray | None = None
    cn_position: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_vn_rows(cls, vn_ptr, vn_adj, n_cns, vn_position=None, cn_position=None, **params):
        vn_ptr = _frozen(vn_ptr)
        vn_adj = _frozen(vn_adj)
        cn_ptr, cn_adj = kernels.csr_transpose(vn_ptr, vn_adj, int(n_cns))
        return cls(
            n_vns=len(vn_ptr) - 1,
            n_cns=int(n_cns),
            vn_ptr=vn_ptr,
            vn_adj=vn_adj,
            cn_ptr=_frozen(cn_ptr),
            cn_adj=_frozen(cn_adj),
            vn_position=None if vn_position is None else _frozen(vn_position),
            cn_position=None if cn_position is None else _frozen(cn_position),
            params=params,
        )

    @classmethod
    def from_matrix(cls, A):
        """Graph of a 0/1 test matrix (rows are CNs, columns are VNs)."""
        A = np.asarray(A)
        if A.ndim != 2 or not np.isin(A, (0, 1)).all():
            raise ParameterError("test matrix must be a 2-D 0/1 array")
        m, n = A.shape
        cols = [np.flatnonzero(A[:, j]) for j in range(n)]
        vn_ptr = np.concatenate([[0], np.cumsum([len(c) for c in cols])])
        vn_adj = np.concatenate(cols) if n else np.zeros(0, dtype=np.int32)
        return cls.from_vn_rows(vn_ptr, vn_adj, m)

    @classmethod
    def from_edges(cls, n_vns, n_cns, vn_of_edge, cn_of_edge, **kw):
        vn_of_edge = np.asarray(vn_of_edge)
        order = np.argsort(vn_of_edge, kind="stable")
        vn_ptr = np.zeros(n_vns + 1, dtype=np.int64)
        np.cumsum(np.bincount(vn_of_edge, minlength=n_vns), out=vn_ptr[1:])
        return cls.from_vn_rows(vn_ptr, np.asarray(cn_of_edge)[order], n_cns, **kw)

    @property
    def n_edges(self) -> int:
        return len(self.vn_adj)

    @property
    def coupled(self) -> bool:
        return self.cn_position is not None

    def vn_degrees(self) -> np.ndarray:
        return np.diff(self.vn_ptr)

    def cn_degrees(self) -> np.ndarray:
        return np.diff(self.cn_ptr)

    def vn_neighbors(self, j: int) -> np.ndarray:
        return self.vn_adj[self.vn_ptr[j]:self.vn_ptr[j + 1]]

    def cn_neighbors(self, i: int) -> np.ndarray:
        return self.cn_adj[self.cn_ptr[i]:self.cn_ptr[i + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(vn, cn) endpoint arrays in VN-major order."""
        return np.repeat(np.arange(self.n_vns, dtype=np.int32), self.vn_degrees()), self.vn_adj

    def to_matrix(self) -> np.ndarray:
        A = np.zeros((self.n_cns, self.n_vns), dtype=np.int8)
        v, c = self.edges()
        np.add.at(A, (c, v), 1)
        return A

    def cn_range(self, first_pos: int, last_pos: int) -> tuple[int, int]:
        """Index range [lo, hi) of CNs at positions first_pos..last_pos."""
        if self.cn_position is None:
            raise ParameterError("graph has no spatial positions")
        lo = int(np.searchsorted(self.cn_position, first_pos, side="left"))
        hi = int(np.searchsorted(self.cn_position, last_pos, side="right"))
        return lo, hi


def _repeated_slots(rows: np.ndarray) -> np.ndarray:
    """Flat indices of row entries equal to an earlier entry of the same row."""
    n, d = rows.shape
    srt = np.sort(rows, axis=1)
    bad = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
    del srt
    out = []
    for v in bad.tolist():
        seen = set()
        for k, c in enumerate(rows[v].tolist()):
            if c in seen:
                out.append(v * d + k)
            seen.add(c)
    return np.array(out, dtype=np.int64)


def sample_regular(n: int, dv: int, dc: int, seed) -> BipartiteGraph:
    """Configuration-model (dv, dc)-regular graph, made simple by edge swaps."""
    if n < 1 or dv < 1 or dc < 1:
        raise ParameterError("n, dv and dc must be positive")
    if (n * dv) % dc:
        raise ParameterError(f"n*dv = {n * dv} is not divisible by dc = {dc}")
    m = n * dv // dc
    if dc > n or dv > m:
        raise SamplingError(f"no simple ({dv},{dc})-regular graph on {n} VNs and {m} CNs")
    rng = np.random.default_rng(seed)
    E = n * dv
    cn_of = np.repeat(np.arange(m, dtype=np.int32), dc)
    rng.shuffle(cn_of)
    rows = cn_of.reshape(n, dv)
    budget = 100 * E
    attempts = 0
    for e in _repeated_slots(rows):
        v, k = divmod(int(e), dv)
        while np.count_nonzero(rows[v] == rows[v, k]) > 1:
            if attempts >= budget:
                raise SamplingError("parallel-edge repair exceeded its retry budget")
            attempts += 1
            f = int(rng.integers(E))
            u, l = divmod(f, dv)
            ce, cf = rows[v, k], rows[u, l]
            if u == v or ce == cf or cf in rows[v] or ce in rows[u]:
                continue
            rows[v, k], rows[u, l] = cf, ce
    vn_ptr = np.arange(0, E + 1, dv, dtype=np.int64)
    return BipartiteGraph.from_vn_rows(vn_ptr, cn_of, m, dv=dv, dc=dc)


def sample_coupled(nb: int, dv: int, dc: int, w: int, L: int, seed) -> BipartiteGraph:
    """Terminated spatially coupled chain.

    Each VN at position tau picks dv CN positions uniformly from tau..tau+w and
    a uniform CN within each; a repeated CN is redrawn within the same
    position (up to 100 times) and then with a fresh position.
    """
    if nb < 1 or dv < 1 or dc < 1:
        raise ParameterError("nb, dv and dc must be positive")
    if (nb * dv) % dc:
        raise ParameterError(f"nb*dv = {nb * dv} is not divisible by dc = {dc}")
    if w < 0 or L < 1:
        raise ParameterError("need w >= 0 and L >= 1")
    m_pos = nb * dv // dc
    if dv > (w + 1) * m_pos:
        raise SamplingError("fewer reachable CNs than the VN degree")
    rng = np.random.default_rng(seed)
    N = nb * L
    E = N * dv
    vn_pos0 = np.repeat(np.arange(L, dtype=np.int32), nb)
    shift = rng.integers(0, w + 1, size=(N, dv), dtype=np.int32)
    rows = rng.integers(0, m_pos, size=(N, dv), dtype=np.int32)
    shift += vn_pos0[:, None]
    shift *= m_pos
    rows += shift
    del shift
    budget = 100 * E
    attempts = 0
    for e in _repeated_slots(rows):
        v, k = divmod(int(e), dv)
        tau = int(vn_pos0[v])
        pos = rows[v, k] // m_pos
        tries = 0
        while np.count_nonzero(rows[v] == rows[v, k]) > 1:
            if attempts >= budget:
                raise SamplingError("parallel-edge redraw exceeded its retry budget")
            attempts += 1
            tries += 1
            if tries > 100:
                pos = tau + int(rng.integers(0, w + 1))
                tries = 0
            rows[v, k] = pos * m_pos + int(rng.integers(0, m_pos))
    n_cns = (L + w) * m_pos
    vn_ptr = np.arange(0, E + 1, dv, dtype=np.int64)
    return BipartiteGraph.from_vn_rows(
        vn_ptr,
        rows.reshape(-1),
        n_cns,
        vn_position=vn_pos0 + 1,
        cn_position=np.repeat(np.arange(1, L + w + 1, dtype=np.int32), m_pos),
        dv=dv, dc=dc, w=w, L=L, nb=nb,
    )


def residual_view(graph: BipartiteGraph, resolved) -> np.ndarray:
    """Per-CN count of incident VNs not in ``resolved`` (a length-n_vns bool mask)."""
    resolved = np.asarray(resolved, dtype=bool)
    if resolved.shape != (graph.n_vns,):
        raise ParameterError(f"resolved mask must have length {graph.n_vns}")
    v, c = graph.edges()
    return np.bincount(c, weights=~resolved[v], minlength=graph.n_cns).astype(np.int64)


def write_edgelist(graph: BipartiteGraph, path) -> None:
    p = graph.params
    header = [graph.n_vns, graph.n_cns, p.get("dv", 0), p.get("dc", 0)]
    if graph.coupled:
        header += [p["w"], p["L"]]
    v, c = graph.edges()
    with open(path, "w") as fh:
        fh.write(" ".join(map(str, header)) + "\n")
        np.savetxt(fh, np.column_stack([v, c]), fmt="%d")


def read_edgelist(path) -> BipartiteGraph:
    with open(path) as fh:
        header = [int(x) for x in fh.readline().split()]
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    n_vns, n_cns, dv, dc = header[:4]
    if len(header) == 6:
        w, L = header[4:]
        nb = n_vns // L
        m_pos = n_cns // (L + w)
        return BipartiteGraph.from_edges(
            n_vns, n_cns, data[:, 0], data[:, 1],
            vn_position=np.arange(n_vns) // nb + 1,
            cn_position=np.arange(n_cns) // m_pos + 1,
            dv=dv, dc=dc, w=w, L=L, nb=nb,
        )
    return BipartiteGraph.from_edges(n_vns, n_cns, data[:, 0], data[:, 1], dv=dv, dc=dc)
