"""Ensemble declarations and rate bookkeeping.

A GLDPC pooling design replaces every constraint node of a regular (dv, dc)
graph by a bundle of ``t*ceil(log2(dc+1)) + 1`` tests; LDPC is the t = 0 case
with one test per constraint node. Rates are kept as exact fractions and
exposed as floats.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from qgt.errors import DomainError, InfeasibleError, ParameterError


class Scheme(str, enum.Enum):
    LDPC = "ldpc"
    GLDPC = "gldpc"


@dataclass(frozen=True)
class CouplingSpec:
    w: int
    L: int

    def __post_init__(self):
        # w = 0 is admitted as the degenerate single-shift chain
        if self.w < 0 or self.L < 1 or self.w >= self.L:
            raise ParameterError(f"coupling needs 0 <= w < L, got w={self.w}, L={self.L}")


@dataclass(frozen=True)
class EnsembleSpec:
    scheme: Scheme
    dv: int
    dc: int
    t: int = 0
    coupling: CouplingSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.dv < 2 or self.dc <= self.dv:
            raise ParameterError(f"need dv >= 2 and dc > dv, got dv={self.dv}, dc={self.dc}")
        if self.scheme is Scheme.LDPC and self.t != 0:
            raise ParameterError("LDPC scheme has correction radius t = 0")
        if self.scheme is Scheme.GLDPC and not 1 <= self.t < self.dc:
            raise ParameterError(f"GLDPC scheme needs 1 <= t < dc, got t={self.t}")

    @property
    def w(self) -> int:
        return self.coupling.w if self.coupling else 0

    @property
    def L(self) -> int:
        return self.coupling.L if self.coupling else 1

    def uncoupled(self) -> EnsembleSpec:
        return EnsembleSpec(self.scheme, self.dv, self.dc, self.t)

    def with_coupling(self, w: int, L: int) -> EnsembleSpec:
        return EnsembleSpec(self.scheme, self.dv, self.dc, self.t, CouplingSpec(w, L))


@dataclass(frozen=True)
class PopulationSpec:
    """Population size (``n`` uncoupled, ``nb`` items per position coupled) and prevalence."""

    n: int
    gamma: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("population must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"prevalence must lie in [0, 1], got {self.gamma}")

    def check(self, spec: EnsembleSpec) -> None:
        if (self.n * spec.dv) % spec.dc:
            raise ParameterError(f"n*dv = {self.n * spec.dv} is not divisible by dc = {spec.dc}")


def bits_per_index(dc: int) -> int:
    """ceil(log2(dc + 1)), computed exactly."""
    return int(dc).bit_length()


def tests_per_cn(dc: int, t: int) -> int:
    return t * bits_per_index(dc) + 1


def rate_value(dv: int, dc: int, t: int = 0) -> Fraction:
    """Raw rate formula with no parameter guards."""
    return Fraction(dv * tests_per_cn(dc, t), dc)


def exact_rate(spec: EnsembleSpec) -> Fraction:
    return rate_value(spec.dv, spec.dc, spec.t)


def rate(spec: EnsembleSpec) -> float:
    """Tests per item of the uncoupled design (coupling is ignored)."""
    return float(exact_rate(spec))


def coupled_rate(spec: EnsembleSpec) -> float:
    """Rate including the (1 + w/L) termination loss."""
    if spec.coupling is None:
        raise ParameterError("coupled_rate needs a coupling spec")
    return float((1 + Fraction(spec.w, spec.L)) * exact_rate(spec))


def tests_per_defective(omega: float, gamma: float) -> float:
    if gamma <= 0:
        raise DomainError("tests per defective is undefined at zero prevalence")
    return float(omega) / float(gamma)


def as_fraction(x) -> Fraction:
    """Exact value of a decimal/fraction literal; floats go through their repr."""
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x).strip())


def dc_for_rate(scheme, t: int, dv: int, omega_target) -> tuple[int, Fraction]:
    """Constraint degree whose rate is closest to ``omega_target`` from below.

    Exact hits win; among equal rates the larger dc is returned. The rate is
    piecewise in dc (one piece per value of ceil(log2(dc+1))), so each piece
    contributes its smallest admissible dc.
    """
    scheme = Scheme(scheme)
    target = as_fraction(omega_target)
    if not 0 < target < 1:
        raise ParameterError(f"target rate must lie in (0, 1), got {omega_target}")
    if scheme is Scheme.LDPC:
        t = 0
    elif t < 1:
        raise ParameterError("GLDPC scheme needs t >= 1")
    floor_dc = max(dv + 1, t + 1)
    best = None
    for bits in range(1, 64):
        lo = max(1 << (bits - 1), floor_dc)
        hi = (1 << bits) - 1
        if lo > hi:
            continue
        need = dv * (t * bits + 1) / target
        dc = max(lo, -(-need.numerator // need.denominator))
        if dc > hi:
            continue
        r = rate_value(dv, dc, t)
        if best is None or r > best[1] or (r == best[1] and dc > best[0]):
            best = (dc, r)
    if best is None:
        raise InfeasibleError(f"no dc >= {floor_dc} reaches rate <= {target}")
    return best
