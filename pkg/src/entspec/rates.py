"""Information-spectrum rates at finite n.

For sequences rho_n, omega_n the difference operator
Pi_n(gamma) = rho_n - exp(n gamma) omega_n defines the trace functional
Tr[{Pi_n >= 0} Pi_n], which falls from 1 to 0 as gamma grows.  The sup/inf
divergence rates are where it collapses to 0 / stops being 1 asymptotically;
at finite n we report the grid points where it crosses epsilon and 1-epsilon.
Entropy rates are divergences against the identity with the sign flipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import operators as ops
from .errors import NumericalError, ResourceLimitError, ValidationError
from .parallel import parallel_map
from .sequences import (
    TIE_RTOL,
    IdentitySequence,
    PurifiedSequence,
    StateSequence,
    StructuredSpectrum,
    _TypeSequence,
    as_structured,
    enumerate_types,
)

DEFAULT_EPSILON = 0.01
DEFAULT_GRID = (-3.0, 1.0, 0.005)
MAX_GRID_POINTS = 10**6
CURVE_SLACK = 1e-9


@dataclass(frozen=True)
class GammaGrid:
    """Uniform grid of gamma values in nats, endpoints included."""

    min: float = DEFAULT_GRID[0]
    max: float = DEFAULT_GRID[1]
    step: float = DEFAULT_GRID[2]

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or not self.min < self.max:
            raise ValidationError(f"degenerate grid: min={self.min!r}, max={self.max!r}")
        if not self.step > 0:
            raise ValidationError("grid step must be positive")
        if (self.max - self.min) / self.step > MAX_GRID_POINTS:
            raise ResourceLimitError(f"grid has more than {MAX_GRID_POINTS} points")

    def points(self) -> np.ndarray:
        k = int(math.floor((self.max - self.min) / self.step + 1e-9))
        return np.round(self.min + self.step * np.arange(k + 1), 12)

    def __len__(self):
        return self.points().size


@dataclass(frozen=True, eq=False)
class TraceCurve:
    """Tr[{Pi_n(gamma) >= 0} Pi_n(gamma)] sampled on a gamma grid."""

    n: int
    gammas: np.ndarray
    values: np.ndarray

    def rows(self):
        return [(self.n, float(g), float(v)) for g, v in zip(self.gammas, self.values)]


class RateBracket(NamedTuple):
    """Per-n crossing points on the gamma grid.

    ``gamma_hi`` is the first grid point where the trace functional is <= eps
    and ``gamma_lo`` the last one where it is >= 1 - eps.  A flag set to True
    means no grid point qualified and the grid boundary was reported instead.
    """

    n: int
    gamma_lo: float
    gamma_hi: float
    lo_out_of_range: bool
    hi_out_of_range: bool

    @property
    def width(self) -> float:
        return self.gamma_hi - self.gamma_lo


@dataclass(frozen=True, eq=False)
class SpectralRateEstimate:
    """Finite-n brackets for a pair of spectral rates.

    For ``quantity="divergence"`` the lower rate (inf-divergence) is read off
    ``gamma_lo`` and the upper rate (sup-divergence) off ``gamma_hi``.  For the
    entropy-type quantities the sign flips: the inf-rate is ``-gamma_hi`` and
    the sup-rate ``-gamma_lo``.
    """

    quantity: str
    epsilon: float
    grid: GammaGrid
    per_n: tuple
    curves: tuple = field(repr=False)

    @property
    def negated(self) -> bool:
        return self.quantity != "divergence"

    def bracket(self, n: int) -> RateBracket:
        for b in self.per_n:
            if b.n == n:
                return b
        raise KeyError(n)

    def lower_rate(self, n: int) -> float:
        b = self.bracket(n)
        return -b.gamma_hi if self.negated else b.gamma_lo

    def upper_rate(self, n: int) -> float:
        b = self.bracket(n)
        return -b.gamma_lo if self.negated else b.gamma_hi

    def lower_cell(self, n: int) -> tuple[float, float]:
        """Grid cell containing the exact crossing behind ``lower_rate``."""
        r = self.lower_rate(n)
        return (r, r + self.grid.step)

    def upper_cell(self, n: int) -> tuple[float, float]:
        r = self.upper_rate(n)
        return (r - self.grid.step, r)

    def rows(self):
        return [(b.n, b.gamma_lo, b.gamma_hi, self.epsilon) for b in self.per_n]

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "epsilon": self.epsilon,
            "grid": {"min": self.grid.min, "max": self.grid.max, "step": self.grid.step},
            "per_n": [
                {"n": b.n, "gamma_lo": b.gamma_lo, "gamma_hi": b.gamma_hi,
                 "lo_out_of_range": b.lo_out_of_range, "hi_out_of_range": b.hi_out_of_range,
                 "lower_rate": self.lower_rate(b.n), "upper_rate": self.upper_rate(b.n)}
                for b in self.per_n
            ],
            "curves": [{"n": c.n, "gamma": c.gammas.tolist(), "trace_value": c.values.tolist()}
                       for c in self.curves],
        }


# -- the trace functional ------------------------------------------------------------


def _structured_excess(log_rho, log_omega, log_mult, log_c) -> float:
    mask = log_rho >= log_c + log_omega + math.log1p(-TIE_RTOL)
    if not mask.any():
        return 0.0
    lr = log_rho[mask]
    with np.errstate(invalid="ignore"):
        shift = log_c + log_omega[mask] - lr
    terms = np.exp(log_mult[mask] + lr) * -np.expm1(shift)
    return math.fsum(terms)


def pi_trace(rho, omega, gamma: float, n: int) -> float:
    """Tr[{Pi >= 0} Pi] for Pi = rho - exp(n gamma) omega.

    Dense inputs are 2-d arrays.  Structured inputs are a
    :class:`StructuredSpectrum` or 1-d eigenvalue array for ``rho`` with
    ``omega=None`` (identity), or two aligned 1-d diagonals of simultaneously
    diagonal operators.  ``omega=None`` always means the identity.
    """
    rho_a = None if isinstance(rho, StructuredSpectrum) else np.asarray(rho)
    if rho_a is not None and rho_a.ndim == 2:
        rho_d = ops.as_hermitian(rho_a, "rho")
        omega_d = np.eye(rho_d.shape[0]) if omega is None else ops.as_hermitian(omega, "omega")
        if omega_d.shape != rho_d.shape:
            raise ValidationError(f"dimension mismatch {rho_d.shape} vs {omega_d.shape}")
        return ops.positive_part_trace(rho_d - math.exp(n * gamma) * omega_d)
    log_c = n * gamma
    if omega is None:
        spec = as_structured(rho)
        return _structured_excess(spec.log_values, np.zeros(spec.size), spec.log_mult, log_c)
    if isinstance(rho, StructuredSpectrum) or isinstance(omega, StructuredSpectrum):
        raise ValidationError("structured spectra carry no shared eigenbasis; pass aligned diagonals instead")
    w = np.asarray(omega, dtype=float)
    if w.ndim != 1:
        raise ValidationError("structured rho needs a 1-d omega diagonal (non-commuting inputs are unsupported)")
    if w.shape != rho_a.shape:
        raise ValidationError(f"dimension mismatch {rho_a.shape} vs {w.shape}")
    if rho_a.min() < 0 or w.min() < 0:
        raise ValidationError("diagonal inputs must be nonnegative")
    with np.errstate(divide="ignore"):
        lr, lw = np.log(rho_a.astype(float)), np.log(w)
    keep = np.isfinite(lr)
    return _structured_excess(lr[keep], lw[keep], np.zeros(int(keep.sum())), log_c)


def structured_curve(log_rho, log_omega, log_mult, n: int, gammas) -> np.ndarray:
    """Trace functional on a whole grid via sorted cumulative sums."""
    keep = np.isfinite(log_rho)
    lr, lw, lm = log_rho[keep], log_omega[keep], log_mult[keep]
    ratio = lr - lw
    order = np.argsort(-ratio, kind="stable")
    ratio = ratio[order]
    cum_a = np.cumsum(np.exp(lm[order] + lr[order]))
    with np.errstate(divide="ignore"):
        log_cum_b = np.log(np.cumsum(np.exp(lm[order] + lw[order])))
    log_c = n * np.asarray(gammas, dtype=float)
    # number of classes with ratio >= log_c (descending array)
    j = np.searchsorted(-ratio, -(log_c + math.log1p(-TIE_RTOL)), side="right")
    vals = np.zeros(log_c.size)
    hit = j > 0
    idx = j[hit] - 1
    vals[hit] = cum_a[idx] - np.exp(log_c[hit] + log_cum_b[idx])
    return np.clip(vals, 0.0, None)


def dense_curve(rho, omega, n: int, gammas) -> np.ndarray:
    rho = ops.as_hermitian(rho, "rho")
    omega = ops.as_hermitian(omega, "omega")
    if rho.shape != omega.shape:
        raise ValidationError(f"dimension mismatch {rho.shape} vs {omega.shape}")
    return np.array([ops.positive_part_trace(rho - math.exp(n * g) * omega) for g in gammas])


def rank_one_excess(spec: StructuredSpectrum, log_c: float) -> float:
    """Trace functional for a pure phi against c * (I (x) rho_B).

    Pi = |phi><phi| - c X with X >= 0 has at most one positive eigenvalue mu,
    the root of sum_i lam_i / (mu + c lam_i) = 1 over the Schmidt
    coefficients; it exists iff rank / c > 1.
    """
    if spec.log_rank <= log_c:
        return 0.0
    lv, lm = spec.log_values, spec.log_mult

    # log of the secular sum, decreasing in log_mu
    def f(log_mu):
        return float(logsumexp(lm + lv - np.logaddexp(log_mu, log_c + lv)))

    lo = -745.0
    if f(lo) <= 0:
        return 0.0
    return math.exp(brentq(f, lo, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def rank_one_curve(spec: StructuredSpectrum, n: int, gammas) -> np.ndarray:
    return np.array([rank_one_excess(spec, n * g) for g in gammas])


def _bracket(n: int, gammas: np.ndarray, values: np.ndarray, eps: float) -> RateBracket:
    low = np.nonzero(values <= eps)[0]
    high = np.nonzero(values >= 1.0 - eps)[0]
    hi_oor = low.size == 0
    lo_oor = high.size == 0
    gamma_hi = float(gammas[-1] if hi_oor else gammas[low[0]])
    gamma_lo = float(gammas[0] if lo_oor else gammas[high[-1]])
    return RateBracket(n, gamma_lo, gamma_hi, lo_oor, hi_oor)


def _check_curve(curve: TraceCurve) -> None:
    v = curve.values
    if v.min() < -CURVE_SLACK or v.max() > 1 + CURVE_SLACK:
        raise NumericalError(f"trace functional left [0, 1] at n={curve.n}")


def _check_args(n_list, eps):
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValidationError("n_list is empty")
    if any(n < 1 for n in n_list):
        raise ValidationError("copy counts must be positive")
    if not 0 < eps < 0.5:
        raise ValidationError(f"epsilon must lie in (0, 0.5), got {eps!r}")
    return n_list


def _assemble(quantity, eps, grid, curves) -> SpectralRateEstimate:
    curves = sorted(curves, key=lambda c: c.n)
    for c in curves:
        _check_curve(c)
    per_n = tuple(_bracket(c.n, c.gammas, c.values, eps) for c in curves)
    return SpectralRateEstimate(quantity, eps, grid, per_n, tuple(curves))


def divergence_curve(rho: StateSequence, omega: StateSequence | None, n: int, gammas) -> TraceCurve:
    if isinstance(rho, _TypeSequence) and (omega is None or isinstance(omega, _TypeSequence)):
        ref = omega if omega is not None else IdentitySequence(rho.local_dim)
        (lr, lw), lm, _, _ = enumerate_types([rho, ref], n)
        return TraceCurve(n, gammas, structured_curve(lr, lw, lm, n, gammas))
    rho_n = rho.dense(n)
    omega_n = np.eye(rho_n.shape[0]) if omega is None else omega.dense(n)
    return TraceCurve(n, gammas, dense_curve(rho_n, omega_n, n, gammas))


def estimate_divergence_rates(rho: StateSequence, omega: StateSequence | None, n_list: Sequence[int],
                              grid: GammaGrid | None = None, epsilon: float = DEFAULT_EPSILON,
                              quantity: str = "divergence") -> SpectralRateEstimate:
    """Brackets for the inf/sup spectral divergence rates of rho against omega.

    ``omega=None`` stands for the identity sequence.  Simultaneously diagonal
    (type-enumerated) pairs use the structured path; anything else is dense.
    """
    n_list = _check_args(n_list, epsilon)
    grid = grid or GammaGrid()
    gammas = grid.points()
    curves = parallel_map(lambda n: divergence_curve(rho, omega, n, gammas), n_list)
    return _assemble(quantity, epsilon, grid, curves)


def estimate_entropy_rates(rho: StateSequence, n_list: Sequence[int], grid: GammaGrid | None = None,
                           epsilon: float = DEFAULT_EPSILON) -> SpectralRateEstimate:
    """Inf/sup spectral entropy rates; ``lower_rate`` is -gamma_hi, ``upper_rate`` -gamma_lo."""
    return estimate_divergence_rates(rho, None, n_list, grid, epsilon, quantity="entropy")


def conditional_curve(seq: StateSequence, n: int, gammas, method: str = "auto") -> TraceCurve:
    if method not in ("auto", "dense", "rank_one"):
        raise ValidationError(f"unknown method {method!r}")
    pure_structured = isinstance(seq, PurifiedSequence) and seq.structured
    if method == "rank_one" or (method == "auto" and pure_structured):
        if not isinstance(seq, PurifiedSequence):
            raise ValidationError("the rank-one path needs a purified (pure bipartite) sequence")
        return TraceCurve(n, gammas, rank_one_curve(seq.spectrum(n), n, gammas))
    if not hasattr(seq, "bipartite_dims"):
        raise ValidationError("conditional rates need bipartite states (dense_list with dims, or purified)")
    rho_ab = seq.dense(n)
    da, db = seq.bipartite_dims(n)
    rho_b = ops.partial_trace_density(rho_ab, (da, db), keep="B")
    omega = np.kron(np.eye(da), rho_b)
    return TraceCurve(n, gammas, dense_curve(rho_ab, omega, n, gammas))


def estimate_conditional_rates(rho_ab: StateSequence, n_list: Sequence[int], grid: GammaGrid | None = None,
                               epsilon: float = DEFAULT_EPSILON, method: str = "auto") -> SpectralRateEstimate:
    """Inf/sup conditional spectral entropy rates S(A|B) against I (x) rho_B.

    Pure sequences given as :class:`PurifiedSequence` over a type-enumerated
    base use the exact rank-one reduction and reach large n; everything else
    is evaluated densely.
    """
    n_list = _check_args(n_list, epsilon)
    grid = grid or GammaGrid()
    gammas = grid.points()
    curves = parallel_map(lambda n: conditional_curve(rho_ab, n, gammas, method), n_list)
    return _assemble("conditional_entropy", epsilon, grid, curves)


# -- lemma checks ----------------------------------------------------------------------


class ProjectionOptimalityInstance(NamedTuple):
    P: np.ndarray
    A: np.ndarray
    B: np.ndarray


class ChannelMonotonicityInstance(NamedTuple):
    kraus: list
    A: np.ndarray
    B: np.ndarray


class ThresholdMassInstance(NamedTuple):
    rho: np.ndarray
    omega: np.ndarray
    gamma: float
    n: int


class LemmaReport(NamedTuple):
    kind: int
    lhs: float
    rhs: float
    margin: float
    passed: bool


LEMMA_SLACK = 1e-9


def check_lemma(kind: int, instance) -> LemmaReport:
    """Evaluate one of the three spectral-projection inequalities.

    1: Tr[P(A-B)] <= Tr[{A>=B}(A-B)] for 0 <= P <= I.
    2: Tr[{T(A)>=T(B)} T(A-B)] <= Tr[{A>=B}(A-B)] for a channel T.
    3: Tr[{rho >= e^{n gamma} omega} omega] <= e^{-n gamma}.
    """
    try:
        if kind == 1:
            p, a, b = (ops.as_hermitian(x) for x in instance)
            w = np.linalg.eigvalsh(p)
            if w.min() < -1e-10 or w.max() > 1 + 1e-10:
                raise ValidationError("P must satisfy 0 <= P <= I")
            diff = a - b
            lhs = float(np.real(np.trace(p @ diff)))
            rhs = ops.positive_part_trace(diff)
        elif kind == 2:
            kraus, a, b = instance
            a, b = ops.as_hermitian(a), ops.as_hermitian(b)
            if ops.kraus_completeness_residual(kraus) > 1e-10:
                raise ValidationError("Kraus operators are not trace preserving")
            ta, tb = ops.apply_kraus(kraus, a), ops.apply_kraus(kraus, b)
            lhs = ops.positive_part_trace(ta - tb)
            rhs = ops.positive_part_trace(a - b)
        elif kind == 3:
            rho, omega, gamma, n = instance
            proj = ops.spectral_compare(rho, math.exp(n * gamma) * np.asarray(omega))
            lhs = float(np.real(np.trace(proj @ omega)))
            rhs = math.exp(-n * gamma)
        else:
            raise ValidationError(f"unknown lemma kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed lemma {kind} instance: {exc}") from exc
    return LemmaReport(kind, lhs, rhs, rhs - lhs, lhs <= rhs + LEMMA_SLACK)


def random_lemma_instance(kind: int, rng: np.random.Generator, dim: int):
    if kind == 1:
        return ProjectionOptimalityInstance(ops.random_contraction(rng, dim), ops.random_hermitian(rng, dim),
                              ops.random_hermitian(rng, dim))
    if kind == 2:
        dim_out = int(rng.integers(1, dim + 1))
        kraus = ops.random_kraus_map(rng, dim, int(rng.integers(1, dim + 2)), dim_out=dim_out)
        return ChannelMonotonicityInstance(kraus, ops.random_hermitian(rng, dim), ops.random_hermitian(rng, dim))
    if kind == 3:
        omega = ops.random_density(rng, dim, rank=int(rng.integers(1, dim + 1))) * rng.uniform(0.1, 3.0)
        return ThresholdMassInstance(ops.random_density(rng, dim), omega, float(rng.uniform(-2, 2)),
                              int(rng.integers(1, 6)))
    raise ValidationError(f"unknown lemma kind {kind!r}")


@dataclass(frozen=True)
class LemmaSuiteReport:
    checks: int
    failures: int
    worst_margin: float
    per_kind: dict

    @property
    def passed(self) -> bool:
        return self.failures == 0


def run_lemma_suite(trials: int, dims: Sequence[int] | int = (2, 3, 4, 5, 6), seed: int = 0,
                    kinds: Sequence[int] = (1, 2, 3)) -> LemmaSuiteReport:
    """Seeded random checks of the three lemmas; dims are cycled over trials."""
    dims = [dims] if isinstance(dims, int) else list(dims)
    checks = failures = 0
    worst = math.inf
    per_kind = {}
    for kind in kinds:
        kf = 0
        for t in range(trials):
            rng = np.random.default_rng([seed, kind, t])
            rep = check_lemma(kind, random_lemma_instance(kind, rng, dims[t % len(dims)]))
            checks += 1
            worst = min(worst, rep.margin)
            if not rep.passed:
                kf += 1
        failures += kf
        per_kind[kind] = {"checks": trials, "failures": kf}
    return LemmaSuiteReport(checks, failures, worst, per_kind)
