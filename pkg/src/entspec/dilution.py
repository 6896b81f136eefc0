"""Entanglement dilution from maximally entangled states.

Fidelities come from closed forms in the Schmidt spectrum of the target:
truncation to the M largest coefficients gives (sum of those)^2, and the
threshold projector {rho_n >= exp(-n alpha)} gives its captured mass.  The
converse bound is the two-term expression in the spectrum of the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .parallel import parallel_map
from .sequences import StateSequence, as_structured, tail_sum

EXACT_CEIL_LOG = 63 * math.log(2)


def truncation_fidelity(spectrum, M: int | None = None, *, log_M: float | None = None) -> float:
    """(sum of the M largest Schmidt coefficients)^2; exactly 1 once M >= rank."""
    spec = as_structured(spectrum)
    if M is not None:
        if M < 1:
            raise ValidationError("M must be at least 1")
        log_M = math.log(M)
    elif log_M is None or log_M < 0:
        raise ValidationError("give M >= 1 or log_M >= 0")
    if M is not None:
        try:
            mults = spec.multiplicities
        except ValidationError:
            mults = None
        if mults is not None:
            if M >= sum(mults):
                return 1.0
            total, left = [], M
            for v, m in zip(spec.values, mults):
                take = min(m, left)
                total.append(take * v)
                left -= take
                if left == 0:
                    break
            return math.fsum(total) ** 2
    if log_M >= spec.log_rank:
        return 1.0
    # log-form fallback: whole classes, then a fractional share of the next
    log_cum = np.logaddexp.accumulate(spec.log_mult)
    full = int(np.searchsorted(log_cum, log_M, side="right"))
    mass = math.fsum(np.exp(spec.log_masses[:full]))
    done = -math.inf if full == 0 else log_cum[full - 1]
    if full < spec.size and done < log_M:
        log_rest = log_M + math.log1p(-math.exp(done - log_M))
        mass += math.exp(log_rest + spec.log_values[full])
    return min(mass, 1.0) ** 2


def coding_fidelity(spectrum, alpha: float, n: int) -> float:
    """Tr[{rho_n >= exp(-n alpha)} rho_n]; ties count inside the projector."""
    return tail_sum(as_structured(spectrum), log_threshold=-n * alpha).mass


def projector_log_count(spectrum, alpha: float, n: int) -> float:
    """log Tr[{rho_n >= exp(-n alpha)}], never above n alpha."""
    return tail_sum(as_structured(spectrum), log_threshold=-n * alpha).log_count


class ConverseBound(NamedTuple):
    term1: float
    term2: float

    @property
    def total(self) -> float:
        return self.term1 + self.term2


def dilution_converse_bound(spectrum, gamma: float, R: float, n: int) -> ConverseBound:
    """F_n <= Tr[{s >= e^{-n gamma}}(s - e^{-n gamma})] + e^{-n(gamma - R)}."""
    t = tail_sum(as_structured(spectrum), log_threshold=-n * gamma)
    return ConverseBound(t.excess, math.exp(-n * (gamma - R)))


@dataclass(frozen=True)
class DilutionOutcome:
    n: int
    mode: str
    alpha_or_gamma: float
    rate: float
    log_M: float
    M: int | None
    ceil_skipped: bool
    fidelity_lb: float | None
    converse_term1: float | None = None
    converse_term2: float | None = None

    @property
    def converse_ub(self) -> float | None:
        if self.converse_term1 is None:
            return None
        return self.converse_term1 + self.converse_term2

    def row(self) -> dict:
        return {"n": self.n, "mode": self.mode, "alpha_or_gamma": self.alpha_or_gamma, "rate": self.rate,
                "fidelity_lb": self.fidelity_lb, "converse_term1": self.converse_term1,
                "converse_term2": self.converse_term2, "converse_ub": self.converse_ub}


def _ceil_rank(log_x: float):
    if log_x < EXACT_CEIL_LOG:
        m = max(1, math.ceil(math.exp(log_x) * (1 - 1e-12)))
        return m, math.log(m), False
    return None, log_x, True


def dilution_sweep(seq: StateSequence, delta: float, n_list, mode: str = "achievable",
                   sbar_estimate: float | None = None, R: float | None = None,
                   gamma: float | None = None) -> list:
    """Per-n dilution records.

    ``achievable``: alpha = sbar_estimate + delta, M = ceil(e^{n alpha}),
    fidelity_lb is the coding fidelity at alpha.
    ``converse``: the bound at rate ``R`` with threshold ``gamma``
    (default ``R + delta / 2``).
    """
    n_list = sorted(int(n) for n in n_list)
    if mode == "achievable":
        if sbar_estimate is None:
            raise ValidationError("achievable mode needs an sbar_estimate")
        alpha = sbar_estimate + delta

        def run(n):
            m, log_m, skipped = _ceil_rank(n * alpha)
            fid = coding_fidelity(seq.spectrum(n), alpha, n)
            return DilutionOutcome(n, mode, alpha, log_m / n, log_m, m, skipped, fid)
    elif mode == "converse":
        if R is None:
            raise ValidationError("converse mode needs a rate R")
        g = R + delta / 2 if gamma is None else gamma

        def run(n):
            b = dilution_converse_bound(seq.spectrum(n), g, R, n)
            return DilutionOutcome(n, mode, g, R, n * R, None, True, None, b.term1, b.term2)
    else:
        raise ValidationError(f"unknown dilution mode {mode!r}")
    return parallel_map(run, n_list)
