"""Density evolution for LDPC/GLDPC pooling designs, plain and spatially coupled.

State convention: ``p`` holds VN-to-CN "unresolved" probabilities per VN
position, ``q`` holds CN-to-VN "resolved" probabilities per CN position
(``L + w`` of them). LDPC tracks two classes (row 0 non-defective, row 1
defective); GLDPC tracks a single defective-and-unresolved probability.
VN positions outside 1..L read as resolved (p = 0).

Coupled averages follow the published recursions: the node update is applied
per shift and the w+1 results are averaged.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from qgt import _pyfallback as _ref
from qgt._backend import kernels
from qgt.ensemble import EnsembleSpec, Scheme, dc_for_rate, rate_value
from qgt.errors import BracketError, InfeasibleError, ParameterError

EPS_SUCCESS = 1e-10
EPS_STALL = 1e-15
MAX_ITERS_UNCOUPLED = 10**6
MAX_ITERS_COUPLED = 10**5


def default_length(w: int) -> int:
    """Coupling length used for threshold computations."""
    return 100 * (w + 1)


@dataclass(frozen=True)
class DeParams:
    spec: EnsembleSpec
    gamma: float
    max_iters: int | None = None
    epsilon_success: float = EPS_SUCCESS
    epsilon_stall: float = EPS_STALL

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"prevalence must lie in [0, 1], got {self.gamma}")
        if not 0 < self.epsilon_stall < self.epsilon_success < 1:
            raise ParameterError("need 0 < epsilon_stall < epsilon_success < 1")
        if self.max_iters is None:
            cap = MAX_ITERS_COUPLED if self.spec.coupling else MAX_ITERS_UNCOUPLED
            object.__setattr__(self, "max_iters", cap)
        elif self.max_iters < 1:
            raise ParameterError("max_iters must be positive")

    @property
    def ldpc(self) -> bool:
        return self.spec.scheme is Scheme.LDPC


@dataclass
class DeState:
    p: np.ndarray
    q: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, params: DeParams) -> DeState:
        rows = 2 if params.ldpc else 1
        L, w = params.spec.L, params.spec.w
        return cls(np.ones((rows, L)), np.zeros((rows, L + w)))

    def copy(self) -> DeState:
        return DeState(self.p.copy(), self.q.copy(), self.iteration)

    p0 = property(lambda self: self.p[0])
    p1 = property(lambda self: self.p[1])
    q0 = property(lambda self: self.q[0])
    q1 = property(lambda self: self.q[1])


def log_binom_prefix(dc: int, t: int) -> np.ndarray:
    """log C(dc-1, i) for i < t."""
    return np.array([math.lgamma(dc) - math.lgamma(i + 1) - math.lgamma(dc - i) for i in range(t)])


def binom_tail(x: float, dc: int, t: int) -> float:
    """P[Bino(dc-1, x) <= t-1]."""
    return _ref._binom_cdf(log_binom_prefix(dc, t).tolist(), t, dc, x)


# -------------------------------------------------------------------- steps

def _need(params, scheme, coupled):
    if params.spec.scheme is not scheme:
        raise ParameterError(f"step expects a {scheme.value} ensemble")
    if coupled and params.spec.coupling is None:
        raise ParameterError("coupled step needs a coupling spec")
    if not coupled and params.spec.coupling is not None:
        raise ParameterError("uncoupled step got a coupled ensemble")


def ldpc_de_step(state: DeState, params: DeParams) -> DeState:
    """One uncoupled LDPC iteration: CN messages from p, then VN messages from q."""
    _need(params, Scheme.LDPC, False)
    g, dv, dc = params.gamma, params.spec.dv, params.spec.dc
    p0, p1 = float(state.p[0, 0]), float(state.p[1, 0])
    q0 = _ref._ldpc_f0(g, dc, p1)
    q1 = _ref._ldpc_f1(g, dc, p0)
    new_p = np.array([[math.pow(1.0 - q0, dv - 1.0)], [math.pow(1.0 - q1, dv - 1.0)]])
    return DeState(new_p, np.array([[q0], [q1]]), state.iteration + 1)


def gldpc_de_step(state: DeState, params: DeParams) -> DeState:
    _need(params, Scheme.GLDPC, False)
    g, dv, dc, t = params.gamma, params.spec.dv, params.spec.dc, params.spec.t
    q = _ref._binom_cdf(log_binom_prefix(dc, t).tolist(), t, dc, float(state.p[0, 0]))
    p = g * math.pow(1.0 - q, dv - 1.0)
    return DeState(np.array([[p]]), np.array([[q]]), state.iteration + 1)


def coupled_ldpc_de_step(state: DeState, params: DeParams) -> DeState:
    _need(params, Scheme.LDPC, True)
    s = state.copy()
    kernels.ldpc_step(s.p[0], s.p[1], s.q[0], s.q[1], params.gamma, params.spec.dv, params.spec.dc, params.spec.w)
    s.iteration += 1
    return s


def coupled_gldpc_de_step(state: DeState, params: DeParams) -> DeState:
    _need(params, Scheme.GLDPC, True)
    sp = params.spec
    s = state.copy()
    kernels.gldpc_step(s.p[0], s.q[0], log_binom_prefix(sp.dc, sp.t), params.gamma, sp.dv, sp.dc, sp.t, sp.w)
    s.iteration += 1
    return s


def step(state: DeState, params: DeParams) -> DeState:
    """Dispatch to the recursion matching the ensemble."""
    coupled = params.spec.coupling is not None
    if params.ldpc:
        return coupled_ldpc_de_step(state, params) if coupled else ldpc_de_step(state, params)
    return coupled_gldpc_de_step(state, params) if coupled else gldpc_de_step(state, params)


# ---------------------------------------------------------------------- run

@dataclass
class DeRun:
    converged: bool
    stalled: bool
    iterations: int
    state: DeState
    max_increase: float
    trace: list | None = None

    @property
    def verdict(self) -> str:
        if self.converged:
            return "converged"
        return "stalled" if self.stalled else "max_iters"


def run_de(params: DeParams, trace: bool = False, trace_every: int = 1) -> DeRun:
    """Iterate from the all-unresolved state.

    Converged: every p entry below ``epsilon_success``. Stalled: the total
    unresolved mass (sum of all p entries) dropped by less than
    ``epsilon_stall`` in one iteration. Otherwise stops at ``max_iters``.
    """
    sp = params.spec
    state = DeState.initial(params)
    if not trace:
        args = (params.gamma, sp.dv, sp.dc)
        tail = (params.max_iters, params.epsilon_success, params.epsilon_stall)
        if params.ldpc:
            out, it, rise = kernels.ldpc_run(state.p[0], state.p[1], state.q[0], state.q[1], *args, sp.w, *tail)
        else:
            lb = log_binom_prefix(sp.dc, sp.t)
            out, it, rise = kernels.gldpc_run(state.p[0], state.q[0], lb, *args, sp.t, sp.w, *tail)
        state.iteration = it
        return DeRun(out == 1, out == 0, it, state, rise)

    rows = [state.copy()]
    prev = 0.0
    for r in state.p:
        prev += _ref._seqsum(r.tolist())
    rise = 0.0
    verdict = 2
    for it in range(1, params.max_iters + 1):
        new = step(state, params)
        rise = max(rise, float((new.p - state.p).max()))
        mass = 0.0
        for tau in range(new.p.shape[1]):
            mass += new.p[0, tau] + new.p[1, tau] if params.ldpc else new.p[0, tau]
        state = new
        if it % trace_every == 0:
            rows.append(state.copy())
        if state.p.max() < params.epsilon_success:
            verdict = 1
            break
        if prev - mass < params.epsilon_stall:
            verdict = 0
            break
        prev = mass
    if rows[-1].iteration != state.iteration:
        rows.append(state.copy())
    return DeRun(verdict == 1, verdict == 0, state.iteration, state, rise, rows)


def write_trace_csv(run: DeRun, fh, ldpc: bool) -> None:
    """One row per (iteration, position); p columns are blank past position L."""
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["iter", "position", "p0", "p1", "q0", "q1"] if ldpc else ["iter", "position", "p", "q"])
    for s in run.trace or [run.state]:
        L, M = s.p.shape[1], s.q.shape[1]
        for tau in range(M):
            ps = [repr(float(x)) for x in s.p[:, tau]] if tau < L else [""] * s.p.shape[0]
            wr.writerow([s.iteration, tau + 1, *ps, *(repr(float(x)) for x in s.q[:, tau])])


# --------------------------------------------------------------- thresholds

@dataclass
class ThresholdResult:
    mode: str
    value: float
    lo: float
    hi: float
    bracket_width: float
    steps: int
    de_iterations: int
    scheme: str
    t: int
    dv: int
    dc: int
    w: int
    L: int
    gamma: float | None = None
    omega: float | None = None
    dc_max: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _converges(spec, gamma, de_kw):
    run = run_de(DeParams(spec, gamma, **de_kw))
    return run.converged, run.iterations


def _with_length(spec: EnsembleSpec, w: int, L: int | None) -> EnsembleSpec:
    if w == 0:
        return spec.uncoupled()
    return spec.with_coupling(w, L or default_length(w))


def gamma_threshold(spec: EnsembleSpec, tol: float = 1e-6, lo: float = 0.0, hi: float = 0.5,
                    **de_kw) -> ThresholdResult:
    """Largest prevalence for which DE converges, by bisection on [lo, hi]."""
    if tol < 1e-7:
        raise ParameterError("tolerance below 1e-7 is not supported")
    total = 0
    ok, n = _converges(spec, hi, de_kw)
    total += n
    if ok:
        raise BracketError(f"DE converges at the upper bracket gamma={hi}")
    ok, n = _converges(spec, lo, de_kw)
    total += n
    if not ok:
        raise BracketError(f"DE does not converge at the lower bracket gamma={lo}")
    steps = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok, n = _converges(spec, mid, de_kw)
        total += n
        steps += 1
        if ok:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(
        "gamma", 0.5 * (lo + hi), lo, hi, hi - lo, steps, total,
        spec.scheme.value, spec.t, spec.dv, spec.dc, spec.w, spec.L,
        omega=float(rate_value(spec.dv, spec.dc, spec.t)),
    )


def gamma_threshold_at_rate(scheme, t: int, dv: int, omega, w: int = 0, L: int | None = None,
                            tol: float = 1e-6, **de_kw) -> ThresholdResult:
    """gamma threshold of the ensemble whose dc realises rate ``omega``."""
    dc, achieved = dc_for_rate(scheme, t, dv, omega)
    spec = _with_length(EnsembleSpec(Scheme(scheme), dv, dc, t if Scheme(scheme) is Scheme.GLDPC else 0), w, L)
    res = gamma_threshold(spec, tol=tol, **de_kw)
    res.omega = float(achieved)
    return res


def omega_threshold(scheme, t: int, dv: int, gamma: float, w: int = 0, L: int | None = None,
                    dc_cap: int = 1 << 20, **de_kw) -> ThresholdResult:
    """Smallest rate whose ensemble DE-converges at prevalence ``gamma``.

    The search over integer dc is exact, so there is no tolerance argument;
    ``lo``/``hi`` are the rates at dc_max + 1 (fails) and dc_max (converges).

    Bisects for the largest converging integer dc (DE success is monotone in
    dc), then minimises the rate over that dc and the top of every lower
    ceil(log2(dc+1)) piece, since the rate jumps up just past 2^k - 1.
    """
    scheme = Scheme(scheme)
    t = t if scheme is Scheme.GLDPC else 0
    floor_dc = max(dv + 1, t + 1)

    def spec_for(dc):
        return _with_length(EnsembleSpec(scheme, dv, dc, t), w, L)

    total = 0
    ok, n = _converges(spec_for(floor_dc), gamma, de_kw)
    total += n
    if not ok:
        raise InfeasibleError(f"DE fails already at the smallest dc={floor_dc}")
    lo, hi = floor_dc, 2 * floor_dc
    while True:
        ok, n = _converges(spec_for(hi), gamma, de_kw)
        total += n
        if not ok:
            break
        lo = hi
        if hi >= dc_cap:
            raise BracketError(f"DE still converges at dc={hi}")
        hi = min(2 * hi, dc_cap)
    steps = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ok, n = _converges(spec_for(mid), gamma, de_kw)
        total += n
        steps += 1
        if ok:
            lo = mid
        else:
            hi = mid
    dc_max = lo
    cands = [dc_max] + [(1 << k) - 1 for k in range(1, dc_max.bit_length()) if (1 << k) - 1 >= floor_dc]
    best = min(cands, key=lambda d: (rate_value(dv, d, t), -d))
    spec = spec_for(best)
    lo_rate, hi_rate = float(rate_value(dv, dc_max + 1, t)), float(rate_value(dv, dc_max, t))
    return ThresholdResult(
        "omega", float(rate_value(dv, best, t)), lo_rate, hi_rate, hi_rate - lo_rate,
        steps, total, scheme.value, t, dv, best, spec.w, spec.L,
        gamma=gamma, dc_max=dc_max,
    )
