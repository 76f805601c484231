"""Monte Carlo harness: sample graph and defects, decode, count misdetections.

Trial ``i`` of a run draws its graph from ``SeedSequence([base_seed, i, 0])``
and its defects from ``SeedSequence([base_seed, i, 1])``, so the outcome of a
trial does not depend on which worker ran it or when. Stopping is decided on
trial prefixes: the record covers trials 0..N-1 for the smallest N meeting the
stopping rule, whatever extra trials a parallel batch may have finished.
Grid points reuse the same trial seeds (common random numbers).
"""
from __future__ import annotations

import csv
import functools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from qgt.ensemble import EnsembleSpec, Scheme, dc_for_rate, exact_rate
from qgt.errors import ParameterError
from qgt.graph import sample_coupled, sample_regular
from qgt.instance import sample_defects
from qgt.peeling import decode

CSV_COLUMNS = [
    "gamma", "omega", "tests_per_defective", "trials", "defectives", "misdetected",
    "misdetection_rate", "rel_stderr", "seed", "scheme", "dv", "dc", "t", "w", "L", "nb",
    "decoder", "W",
]
UNDEFINED = "NA"
SEED_LABEL = "SeedSequence([base_seed, trial, stream]); stream 0 = graph, 1 = defects"


@dataclass(frozen=True)
class SimConfig:
    spec: EnsembleSpec
    size: int  # n when uncoupled, nb (items per position) when coupled
    gammas: tuple = ()
    omegas: tuple = ()  # rate sweep at the single prevalence in ``gammas``
    decoder: str = "full"
    W: int | None = None
    min_trials: int = 10
    min_error_events: int = 100
    max_trials: int = 10_000
    base_seed: int = 0
    reuse_graph: bool = False
    fixed_k: bool = False
    exploit_full: bool = False

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "omegas", tuple(self.omegas))
        if not 1 <= self.min_trials <= self.max_trials:
            raise ParameterError("need 1 <= min_trials <= max_trials")
        if self.min_error_events < 0:
            raise ParameterError("min_error_events must be non-negative")
        if self.size < 1:
            raise ParameterError("population size must be positive")
        if not self.gammas:
            raise ParameterError("prevalence grid is empty")
        if any(not 0.0 <= g <= 1.0 for g in self.gammas):
            raise ParameterError("prevalences must lie in [0, 1]")
        for grid in (self.gammas, self.omegas):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ParameterError("grids must be strictly increasing")
        if self.omegas and len(self.gammas) != 1:
            raise ParameterError("a rate sweep takes exactly one prevalence")
        if self.decoder not in ("full", "window"):
            raise ParameterError("decoder must be 'full' or 'window'")
        if self.decoder == "window":
            if self.spec.coupling is None:
                raise ParameterError("window decoding needs a coupled ensemble")
            if self.W is None or not 1 <= self.W <= self.spec.L + self.spec.w:
                raise ParameterError("window size W must lie in [1, L+w]")

    @property
    def stop_rule(self) -> dict:
        return {"min_trials": self.min_trials, "min_error_events": self.min_error_events,
                "max_trials": self.max_trials}


@dataclass
class SimRecord:
    gamma: float
    omega: float
    tests_per_defective: float | None
    trials: int
    defectives: int
    misdetected: int
    false_alarms: int
    successes: int
    seed: int
    scheme: str
    dv: int
    dc: int
    t: int
    w: int
    L: int
    nb: int
    decoder: str
    W: int | None
    wall_time: float = 0.0
    seed_label: str = SEED_LABEL
    stop_rule: dict = field(default_factory=dict)

    @property
    def misdetection_rate(self) -> float | None:
        return self.misdetected / self.defectives if self.defectives else None

    @property
    def rel_stderr(self) -> float | None:
        return mc_error_bars(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["misdetection_rate"] = self.misdetection_rate
        d["rel_stderr"] = self.rel_stderr
        return d


def mc_error_bars(record: SimRecord) -> float | None:
    """Relative standard error proxy 1/sqrt(misdetected); None without events."""
    if record.misdetected < 1:
        return None
    return 1.0 / math.sqrt(record.misdetected)


def _seed(base_seed: int, trial: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base_seed, trial, stream])


@functools.lru_cache(maxsize=1)
def _graph(scheme, dv, dc, w, L, size, base_seed, trial):
    seed = _seed(base_seed, trial, 0)
    if L is None:
        return sample_regular(size, dv, dc, seed)
    return sample_coupled(size, dv, dc, w, L, seed)


def _trial(task) -> tuple[int, int, int, int]:
    """(defectives, misdetected, false_alarms, success) of one trial."""
    (scheme, t, dv, dc, w, L, size, gamma, W, base_seed, trial, reuse, fixed_k, exploit_full) = task
    if reuse:
        graph = _graph(scheme, dv, dc, w, L, size, base_seed, 0)
    else:
        _graph.cache_clear()
        graph = _graph.__wrapped__(scheme, dv, dc, w, L, size, base_seed, trial)
    x = sample_defects(graph.n_vns, gamma, _seed(base_seed, trial, 1), fixed_k=fixed_k)
    res = decode(graph, x, scheme, t=t, W=W, exploit_full=exploit_full)
    return res.n_defective, res.misdetected, res.false_alarms, int(res.success)


def _task(config: SimConfig, spec: EnsembleSpec, size: int, gamma: float, trial: int):
    L = spec.L if spec.coupling else None
    W = config.W if config.decoder == "window" else None
    return (spec.scheme.value, spec.t, spec.dv, spec.dc, spec.w, L, size, gamma, W,
            config.base_seed, trial, config.reuse_graph, config.fixed_k, config.exploit_full)


def _fit_size(spec: EnsembleSpec, size: int) -> int:
    """Round ``size`` to the nearest multiple admitting size*dv % dc == 0."""
    step = spec.dc // math.gcd(spec.dv, spec.dc)
    return max(step, step * round(size / step))


def run_point(config: SimConfig, gamma: float, spec: EnsembleSpec | None = None,
              executor=None, batch: int | None = None) -> SimRecord:
    """Aggregate trials at one prevalence until the stopping rule is met."""
    spec = spec or config.spec
    size = config.size
    if (size * spec.dv) % spec.dc:
        raise ParameterError(f"size*dv = {size * spec.dv} is not divisible by dc = {spec.dc}")
    start = time.perf_counter()
    results: list[tuple] = []
    totals = [0, 0, 0, 0]
    n_used = None
    batch = batch or (getattr(executor, "_max_workers", 1) if executor else 1)
    while n_used is None:
        lo = len(results)
        want = config.min_trials if lo == 0 else batch
        hi = min(lo + max(want, 1), config.max_trials)
        tasks = [_task(config, spec, size, gamma, i) for i in range(lo, hi)]
        results.extend(executor.map(_trial, tasks) if executor else map(_trial, tasks))
        for i in range(lo, hi):
            for k in range(4):
                totals[k] += results[i][k]
            done = i + 1
            if done >= config.min_trials and (totals[1] >= config.min_error_events or done == config.max_trials):
                n_used = done
                break
    defectives, mis, fa, ok = totals
    omega = float(exact_rate(spec))
    return SimRecord(
        gamma=gamma, omega=omega,
        tests_per_defective=omega / gamma if gamma > 0 else None,
        trials=n_used, defectives=defectives, misdetected=mis, false_alarms=fa, successes=ok,
        seed=config.base_seed, scheme=spec.scheme.value, dv=spec.dv, dc=spec.dc, t=spec.t,
        w=spec.w, L=spec.L, nb=size, decoder=config.decoder,
        W=config.W if config.decoder == "window" else None,
        wall_time=time.perf_counter() - start, stop_rule=config.stop_rule,
    )


def sweep(config: SimConfig, threads: int = 1) -> list[SimRecord]:
    """run_point over the prevalence grid, or over the rate grid at fixed prevalence.

    For a rate sweep the constraint degree of each point comes from
    dc_for_rate and the population size is rounded to the nearest value the
    new degree admits.
    """
    executor = ProcessPoolExecutor(threads) if threads > 1 else None
    try:
        if not config.omegas:
            return [run_point(config, g, executor=executor, batch=threads) for g in config.gammas]
        out = []
        sp = config.spec
        for omega in config.omegas:
            dc, _ = dc_for_rate(sp.scheme, sp.t, sp.dv, omega)
            spec = EnsembleSpec(sp.scheme, sp.dv, dc, sp.t if sp.scheme is Scheme.GLDPC else 0, sp.coupling)
            cfg = replace(config, spec=spec, size=_fit_size(spec, config.size), omegas=())
            out.append(run_point(cfg, config.gammas[0], executor=executor, batch=threads))
        return out
    finally:
        if executor:
            executor.shutdown()


def _fmt(x) -> str:
    if x is None:
        return UNDEFINED
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_csv(records, fh) -> None:
    """Fixed column order; undefined rates are written as NA."""
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_dict()
        wr.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
