"""Entanglement concentration by a threshold measurement.

Alice measures {Q_n, I - Q_n} with Q_n = {rho_n < exp(-n gamma) I}.  On
success every post-measurement Schmidt coefficient is at most
exp(-n gamma) / Tr[Q_n rho_n], so Nielsen's criterion allows conversion to a
maximally entangled state of rank M_n = floor(Tr[Q_n rho_n] exp(n gamma)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import operators as ops
from .errors import ProtocolAborted, ValidationError
from .parallel import parallel_map
from .sequences import (
    TIE_RTOL,
    NORMALIZATION_TOL,
    StateSequence,
    StructuredSpectrum,
    as_structured,
    threshold_mask,
)

MAJORIZATION_SLACK = 1e-10
EXACT_FLOOR_LOG = 63 * math.log(2)
HEAD_CLASSES = 64
FULL_SPECTRUM_MAX_N = 20


def nielsen_majorizes(source, target) -> bool:
    """True iff every prefix sum of ``source`` is <= that of ``target``.

    Both are sorted descending internally and the shorter one is padded with
    zeros.  By Nielsen's theorem this is exactly when the pure state with
    Schmidt spectrum ``source`` converts to ``target`` under LOCC.

    >>> nielsen_majorizes([0.5, 0.5], [0.7, 0.3])
    True
    """
    s = np.sort(np.asarray(source, dtype=float))[::-1]
    t = np.sort(np.asarray(target, dtype=float))[::-1]
    for name, v in (("source", s), ("target", t)):
        if v.size == 0 or v.min() < -NORMALIZATION_TOL or abs(v.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"{name} spectrum is not normalized")
    size = max(s.size, t.size)
    s = np.pad(s, (0, size - s.size))
    t = np.pad(t, (0, size - t.size))
    return bool(np.all(np.cumsum(s) <= np.cumsum(t) + MAJORIZATION_SLACK))


def majorized_by_uniform(spec: StructuredSpectrum, log_m: float) -> bool:
    """Nielsen check against the uniform spectrum of rank M, class by class.

    Inside one class both prefix sums are linear (the target's only kink is
    at M, where it becomes concave), so checking the class endpoints suffices.
    """
    log_cum_count = np.logaddexp.accumulate(spec.log_mult)
    cum_mass = np.cumsum(np.exp(spec.log_masses))
    target = np.minimum(np.exp(log_cum_count - log_m), 1.0)
    return bool(np.all(cum_mass <= target + MAJORIZATION_SLACK))


def rate_lower_bound(gamma: float, n: int, eps_n: float) -> float:
    """gamma - (2/n)(eps_n + exp(-n gamma)), valid when eps_n < 1/2."""
    if n < 1:
        raise ValidationError("n must be positive")
    if not 0 <= eps_n < 0.5:
        raise ValidationError(f"rate bound needs 0 <= eps_n < 1/2, got {eps_n!r}")
    return gamma - (2.0 / n) * (eps_n + math.exp(-n * gamma))


@dataclass(frozen=True, eq=False)
class ConcentrationOutcome:
    n: int
    gamma: float
    p_fail: float
    success: float
    log_M: float
    M: int | None
    floor_skipped: bool
    rate: float
    majorization_ok: bool
    rate_lower_bound: float | None
    post_spectrum: StructuredSpectrum | None = field(default=None, repr=False)

    @property
    def aborted(self) -> bool:
        return self.M == 0 or self.success == 0

    @property
    def post_spectrum_head(self) -> list:
        if self.post_spectrum is None:
            return []
        return self.post_spectrum.head(HEAD_CLASSES)

    @property
    def head_mass(self) -> float:
        if self.post_spectrum is None:
            return 0.0
        return math.fsum(np.exp(self.post_spectrum.log_masses[:HEAD_CLASSES]))

    def full_post_spectrum(self) -> np.ndarray:
        if self.post_spectrum is None:
            return np.array([])
        if self.n > FULL_SPECTRUM_MAX_N:
            raise ValidationError(f"full post-measurement spectrum is only kept for n <= {FULL_SPECTRUM_MAX_N}")
        return self.post_spectrum.expand()

    def row(self) -> dict:
        return {"n": self.n, "gamma": self.gamma, "p_fail": self.p_fail, "log_M": self.log_M,
                "rate": self.rate, "rate_lower_bound": self.rate_lower_bound,
                "majorization_ok": self.majorization_ok}


def _target_rank(log_success: float, log_threshold_inv: float):
    """floor(s * e^{n gamma}) in exact or log form."""
    log_x = log_success + log_threshold_inv
    if log_x < EXACT_FLOOR_LOG:
        # round-off guard: keep M <= s e^{n gamma} up to 1e-12 relative
        m = math.floor(math.exp(log_x) * (1 + 1e-12))
        return m, (math.log(m) if m > 0 else -math.inf), False
    return None, log_x, True


def concentrate(spectrum, gamma: float, n: int) -> ConcentrationOutcome:
    """Run the threshold protocol on one Schmidt spectrum.

    Raises :class:`ProtocolAborted` when the measurement can never succeed or
    the target rank is zero; the partial outcome is attached to the error.
    """
    spec = as_structured(spectrum)
    log_thr = -n * gamma
    # strict "<": near-ties go to the failure outcome
    fail = threshold_mask(spec, log_thr, TIE_RTOL)
    ok = ~fail
    lm = spec.log_masses
    p_fail = math.fsum(np.exp(lm[fail])) if fail.any() else 0.0
    success = math.fsum(np.exp(lm[ok])) if ok.any() else 0.0
    if not ok.any():
        out = ConcentrationOutcome(n, gamma, p_fail, 0.0, -math.inf, 0, False, -math.inf, False, None)
        raise ProtocolAborted("measurement never succeeds: every eigenvalue is above threshold", out)
    log_s = float(logsumexp(lm[ok]))
    m, log_m, skipped = _target_rank(log_s, n * gamma)
    post = spec.conditioned(ok)
    lrb = rate_lower_bound(gamma, n, p_fail) if p_fail < 0.5 else None
    if m == 0:
        out = ConcentrationOutcome(n, gamma, p_fail, success, -math.inf, 0, False, -math.inf, False, lrb, post)
        raise ProtocolAborted("target rank floor(s e^{n gamma}) is zero", out)
    major = majorized_by_uniform(post, log_m)
    return ConcentrationOutcome(n, gamma, p_fail, success, log_m, m, skipped, log_m / n, major, lrb, post)


def concentrate_state(state: ops.PureBipartiteState, gamma: float, n: int) -> ConcentrationOutcome:
    """Dense version: build Q_n on Alice's side, measure, and re-diagonalize.

    Serves as an independent cross-check of :func:`concentrate` for small n.
    """
    rho = ops.partial_trace(state, "A")
    thr = math.exp(-n * gamma)
    q_bar = ops.spectral_compare(rho, thr * np.eye(rho.shape[0]))
    q = np.eye(rho.shape[0]) - q_bar
    after = q @ state.amplitudes
    success = float(np.sum(np.abs(after) ** 2))
    p_fail = float(np.real(np.trace(q_bar @ rho)))
    if success <= 1e-14:
        raise ProtocolAborted("measurement never succeeds")
    post_state = ops.PureBipartiteState(after / math.sqrt(success))
    lam = ops.schmidt_spectrum(post_state)
    m = math.floor(success * math.exp(n * gamma) * (1 + 1e-12))
    if m == 0:
        raise ProtocolAborted("target rank is zero")
    major = nielsen_majorizes(lam, np.full(m, 1.0 / m))
    lrb = rate_lower_bound(gamma, n, p_fail) if p_fail < 0.5 else None
    return ConcentrationOutcome(n, gamma, p_fail, success, math.log(m), m, False, math.log(m) / n, major, lrb,
                                StructuredSpectrum.from_values(lam))


def concentration_sweep(seq: StateSequence, gamma: float, n_list, strict: bool = True) -> list:
    """One :class:`ConcentrationOutcome` per n, ordered by n.

    With ``strict=False`` aborted runs are kept (``M == 0``) instead of raising.
    """
    def run(n):
        try:
            return concentrate(seq.spectrum(n), gamma, n)
        except ProtocolAborted as exc:
            if strict or exc.outcome is None:
                raise
            return exc.outcome

    return parallel_map(run, sorted(int(n) for n in n_list))
