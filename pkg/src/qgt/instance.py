"""Ground-truth defect vectors and noiseless quantitative test outcomes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qgt.errors import ParameterError
from qgt.graph import BipartiteGraph


@dataclass(frozen=True, eq=False)
class DefectVector:
    bits: np.ndarray  # int8, 1 = defective

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.int8)
        if bits.ndim != 1 or ((bits != 0) & (bits != 1)).any():
            raise ParameterError("defect vector must be a 1-D 0/1 array")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "k", int(np.count_nonzero(bits)))

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True, eq=False)
class Syndrome:
    counts: np.ndarray  # per-CN number of defective neighbours

    def __len__(self):
        return len(self.counts)


def sample_defects(n: int, gamma: float, seed, fixed_k: bool = False) -> DefectVector:
    """i.i.d. Bernoulli(gamma) defects.

    ``fixed_k`` (a variance-reduction aid, not the i.i.d. model) instead marks
    exactly round(gamma*n) items chosen uniformly at random.
    """
    if n < 0:
        raise ParameterError("n must be non-negative")
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"prevalence must lie in [0, 1], got {gamma}")
    rng = np.random.default_rng(seed)
    if fixed_k:
        bits = np.zeros(n, dtype=np.int8)
        bits[rng.choice(n, size=int(round(gamma * n)), replace=False)] = 1
        return DefectVector(bits)
    return DefectVector((rng.random(n) < gamma).astype(np.int8))


def syndrome(graph: BipartiteGraph, defects) -> Syndrome:
    bits = defects.bits if isinstance(defects, DefectVector) else np.asarray(defects)
    if len(bits) != graph.n_vns:
        raise ParameterError(f"defect vector has length {len(bits)}, graph has {graph.n_vns} VNs")
    hot = np.flatnonzero(bits)
    starts, stops = graph.vn_ptr[hot], graph.vn_ptr[hot + 1]
    if len(hot) and (stops - starts == stops[0] - starts[0]).all():
        d = int(stops[0] - starts[0])
        cols = graph.vn_adj[(starts[:, None] + np.arange(d)).ravel()]
    else:
        cols = np.concatenate([graph.vn_adj[a:b] for a, b in zip(starts, stops)] or [np.zeros(0, np.int32)])
    return Syndrome(np.bincount(cols, minlength=graph.n_cns).astype(np.int32))
