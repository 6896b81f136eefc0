"""State sequences {rho_n} and their type-class spectra.

An i.i.d. power rho^{(x)n} of a diagonal single-copy state has at most
C(n+d-1, d-1) distinct eigenvalues, one per occupation histogram (type) of
the d basis labels.  :class:`StructuredSpectrum` stores one entry per type
with its multiplicity in log form, which keeps n in the hundreds cheap and
avoids overflow in multinomials.  Commuting two-term mixtures reuse the same
enumeration because both branches are functions of the type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from . import operators as ops
from .errors import ResourceLimitError, ValidationError

MAX_CLASSES = 5_000_000
EXACT_MULT_MAX_N = 300
MAX_NONCOMMUTING_N = 12
NORMALIZATION_TOL = 1e-9
TIE_RTOL = 1e-12


def compositions(n: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``n``."""
    if parts < 1 or n < 0:
        raise ValidationError("compositions need parts >= 1 and n >= 0")
    count = math.comb(n + parts - 1, parts - 1)
    if count > MAX_CLASSES:
        raise ResourceLimitError(f"{count} type classes exceed cap {MAX_CLASSES}")
    if parts == 1:
        return np.array([[n]], dtype=np.int32)
    if parts == 2:
        k = np.arange(n, -1, -1, dtype=np.int32)
        return np.column_stack([k, n - k])
    blocks = []
    for k in range(n, -1, -1):
        rest = compositions(n - k, parts - 1)
        blocks.append(np.column_stack([np.full(len(rest), k, dtype=np.int32), rest]))
    return np.vstack(blocks)


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def _dot_log(types: np.ndarray, logv: np.ndarray) -> np.ndarray:
    # sum_j k_j log v_j with 0 * log 0 = 0
    with np.errstate(invalid="ignore"):
        terms = np.where(types > 0, types * logv[None, :], 0.0)
    return terms.sum(axis=1)


def _log_multinomial(types: np.ndarray, n: int) -> np.ndarray:
    return gammaln(n + 1) - gammaln(types + 1).sum(axis=1)


@dataclass(frozen=True, eq=False)
class StructuredSpectrum:
    """Eigenvalue classes ``(value, multiplicity)`` sorted by descending value.

    ``log_values`` and ``log_mult`` are the working representation.  When the
    classes come from a type enumeration, ``types`` and ``group_sizes`` allow
    exact integer multiplicities to be rebuilt for n <= 300.
    """

    log_values: np.ndarray
    log_mult: np.ndarray
    n: int | None = None
    types: np.ndarray | None = None
    group_sizes: tuple | None = None
    exact_mult: tuple | None = None

    def __post_init__(self):
        lv = np.asarray(self.log_values, dtype=float).ravel()
        lm = np.asarray(self.log_mult, dtype=float).ravel()
        if lv.shape != lm.shape or lv.size == 0:
            raise ValidationError("log_values and log_mult must be equal-length, non-empty")
        # zero eigenvalues carry no mass and never enter a projector
        order = np.argsort(-lv, kind="stable")
        order = order[np.isfinite(lv[order])]
        if order.size == 0:
            raise ValidationError("spectrum has no nonzero eigenvalue")
        object.__setattr__(self, "log_values", lv[order])
        object.__setattr__(self, "log_mult", lm[order])
        if self.types is not None:
            object.__setattr__(self, "types", np.asarray(self.types)[order])
        if self.exact_mult is not None:
            object.__setattr__(self, "exact_mult", tuple(self.exact_mult[i] for i in order))
        mass = self.total_mass()
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"spectrum mass {mass!r} differs from 1")

    @classmethod
    def from_values(cls, values, tol: float = ops.SPECTRUM_TOL) -> "StructuredSpectrum":
        """Plain spectrum; exactly equal eigenvalues share a class."""
        lam = ops.as_spectrum(values, tol=tol)
        vals, counts = np.unique(lam[lam > 0], return_counts=True)
        return cls.from_classes(vals, counts)

    @classmethod
    def from_classes(cls, values, multiplicities) -> "StructuredSpectrum":
        vals = np.asarray(values, dtype=float)
        mult = [int(m) for m in multiplicities]
        keep = [i for i, (v, m) in enumerate(zip(vals, mult)) if v > 0 and m > 0]
        return cls(np.log(vals[keep]), np.array([math.log(mult[i]) for i in keep]),
                   exact_mult=tuple(mult[i] for i in keep))

    @property
    def size(self) -> int:
        return self.log_values.size

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def log_masses(self) -> np.ndarray:
        return self.log_values + self.log_mult

    @cached_property
    def multiplicities(self) -> tuple:
        """Exact integer multiplicities (available for n <= 300)."""
        if self.exact_mult is not None:
            return self.exact_mult
        if self.types is None or self.n is None or self.n > EXACT_MULT_MAX_N:
            raise ValidationError("exact multiplicities are only kept for enumerated spectra with n <= 300")
        sizes = self.group_sizes
        out = []
        fact = [math.factorial(i) for i in range(self.n + 1)]
        for row in self.types.tolist():
            m = fact[self.n]
            extra = 1
            for k, s in zip(row, sizes):
                m //= fact[k]
                if s != 1:
                    extra *= s**k
            out.append(m * extra)
        return tuple(out)

    @property
    def log_rank(self) -> float:
        return float(logsumexp(self.log_mult))

    @property
    def rank(self) -> int:
        try:
            return sum(self.multiplicities)
        except ValidationError:
            return int(round(math.exp(self.log_rank)))

    def total_mass(self) -> float:
        return math.fsum(np.exp(self.log_masses))

    def expand(self, max_size: int = 1 << 20) -> np.ndarray:
        """Full descending eigenvalue list (small spectra only)."""
        mults = self.multiplicities
        total = sum(mults)
        if total > max_size:
            raise ResourceLimitError(f"spectrum of rank {total} too large to expand")
        return np.repeat(self.values, mults)

    def head(self, k: int = 64) -> list[tuple[float, float]]:
        """Top ``k`` classes as ``(value, log_multiplicity)`` pairs."""
        return [(float(v), float(m)) for v, m in zip(self.values[:k], self.log_mult[:k])]

    def conditioned(self, mask: np.ndarray) -> "StructuredSpectrum":
        """Renormalized spectrum restricted to the classes selected by ``mask``."""
        lv = self.log_values[mask]
        lm = self.log_mult[mask]
        if lv.size == 0:
            raise ValidationError("empty subset")
        lv = lv - logsumexp(lv + lm)
        exact = None
        if self.exact_mult is not None:
            exact = tuple(m for m, keep in zip(self.exact_mult, mask) if keep)
        types = None if self.types is None else self.types[mask]
        return StructuredSpectrum(lv, lm, n=self.n, types=types, group_sizes=self.group_sizes, exact_mult=exact)


def as_structured(spectrum) -> StructuredSpectrum:
    if isinstance(spectrum, StructuredSpectrum):
        return spectrum
    return StructuredSpectrum.from_values(spectrum)


class TailSum(NamedTuple):
    mass: float
    excess: float
    log_count: float

    @property
    def count(self) -> float:
        return math.exp(self.log_count)


def threshold_mask(spec: StructuredSpectrum, log_threshold: float, rtol: float = TIE_RTOL) -> np.ndarray:
    """Classes with value >= threshold; values within ``rtol`` below count as ties."""
    return spec.log_values >= log_threshold + math.log1p(-rtol)


def tail_sum(spec, threshold: float | None = None, *, log_threshold: float | None = None,
             rtol: float = TIE_RTOL) -> TailSum:
    """Mass, excess and log-count of the eigenvalues at or above a threshold.

    Returns ``(sum mult*lam, sum mult*(lam - c), log sum mult)`` over classes
    with ``lam >= c``.  Pass ``log_threshold`` when ``c`` under/overflows.
    """
    spec = as_structured(spec)
    if log_threshold is None:
        if threshold is None or not threshold > 0:
            raise ValidationError("threshold must be positive")
        log_threshold = math.log(threshold)
    mask = threshold_mask(spec, log_threshold, rtol)
    if not mask.any():
        return TailSum(0.0, 0.0, -math.inf)
    lmass = spec.log_masses[mask]
    mass = math.fsum(np.exp(lmass))
    # lam - c = lam * (1 - c/lam), evaluated without cancellation
    excess = math.fsum(np.exp(lmass) * -np.expm1(log_threshold - spec.log_values[mask]))
    return TailSum(mass, excess, float(logsumexp(spec.log_mult[mask])))


# -- sequences ------------------------------------------------------------------------


class StateSequence:
    """A rule producing rho_n for every copy count n."""

    kind = "abstract"
    structured = False

    def spectrum(self, n: int) -> StructuredSpectrum:
        return StructuredSpectrum.from_values(np.linalg.eigvalsh(self.dense(n)))

    def dense(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


class _TypeSequence(StateSequence):
    """Shared machinery for sequences diagonal in a product basis.

    Subclasses give ``rows`` (log single-copy vectors) and ``combine`` which
    maps the per-row sums k.log v onto the log eigenvalue of that type.
    """

    structured = True
    rows: np.ndarray
    combine: Callable

    @property
    def local_dim(self) -> int:
        return self.rows.shape[1]

    def spectrum(self, n: int) -> StructuredSpectrum:
        (lv,), lm, types, sizes = enumerate_types([self], n)
        return StructuredSpectrum(lv, lm, n=n, types=types, group_sizes=sizes)

    def diagonal(self, n: int) -> np.ndarray:
        ops.check_dense_dim(self.local_dim**n)
        sums = []
        for row in np.exp(self.rows):
            sums.append(_log(ops.kron_power(row, n)))
        return np.exp(self.combine(np.array(sums)))

    def dense(self, n: int) -> np.ndarray:
        return np.diag(self.diagonal(n)).astype(complex)


def enumerate_types(seqs, n: int):
    """Joint type enumeration for simultaneously diagonal sequences.

    Returns per-sequence log eigenvalues, the shared log multiplicities, the
    type array over merged basis labels and the merged group sizes.
    """
    dims = {s.local_dim for s in seqs}
    if len(dims) != 1:
        raise ValidationError(f"sequences have different local dimensions {sorted(dims)}")
    stacked = np.vstack([s.rows for s in seqs])
    # merge basis labels on which every sequence agrees
    cols, sizes = np.unique(stacked.T, axis=0, return_counts=True)
    types = compositions(n, cols.shape[0])
    lm = _log_multinomial(types, n) + types @ np.log(sizes)
    out, start = [], 0
    for s in seqs:
        r = s.rows.shape[0]
        sums = np.array([_dot_log(types, cols[:, start + i]) for i in range(r)])
        out.append(s.combine(sums))
        start += r
    return out, lm, types, tuple(int(x) for x in sizes)


def _single_copy_spectrum(rho0) -> tuple[np.ndarray, np.ndarray | None]:
    a = np.asarray(rho0)
    if a.ndim == 2:
        rho = ops.as_density(a)
        return ops.as_spectrum(np.clip(np.linalg.eigvalsh(rho), 0, None)), rho
    return ops.as_spectrum(a), None


class IIDSequence(_TypeSequence):
    """rho_n = rho0^{(x)n}."""

    kind = "iid"

    def __init__(self, rho0):
        lam, matrix = _single_copy_spectrum(rho0)
        if matrix is not None and np.allclose(matrix, np.diag(np.diag(matrix)), atol=1e-14):
            lam, matrix = np.diag(matrix).real.copy(), None
        self.single = lam
        # kept only when rho0 is not diagonal in the computational basis
        self.matrix = matrix
        self.rows = _log(lam)[None, :]

    def combine(self, sums):
        return sums[0]

    def dense(self, n: int) -> np.ndarray:
        if self.matrix is not None:
            return ops.kron_power(self.matrix, n)
        return super().dense(n)

    def to_config(self) -> dict:
        return {"kind": "iid", "spectrum": [float(x) for x in self.single]}


@dataclass(frozen=True)
class MixtureSpec:
    sigma: tuple
    omega: tuple
    t: float

    def __post_init__(self):
        s = ops.as_spectrum(self.sigma, tol=NORMALIZATION_TOL)
        w = ops.as_spectrum(self.omega, tol=NORMALIZATION_TOL)
        if s.size != w.size:
            raise ValidationError("sigma and omega must have the same dimension")
        if not 0 < self.t < 1:
            raise ValidationError(f"mixture weight t must lie in (0, 1), got {self.t!r}")
        object.__setattr__(self, "sigma", tuple(np.asarray(self.sigma, float) / np.sum(self.sigma)))
        object.__setattr__(self, "omega", tuple(np.asarray(self.omega, float) / np.sum(self.omega)))


class MixtureSequence(_TypeSequence):
    """rho_n = t sigma^{(x)n} + (1-t) omega^{(x)n} with sigma, omega diagonal."""

    kind = "mixture"

    def __init__(self, spec: MixtureSpec):
        self.spec = spec
        self.rows = np.vstack([_log(spec.sigma), _log(spec.omega)])
        self._lt, self._l1t = math.log(spec.t), math.log1p(-spec.t)

    def combine(self, sums):
        return np.logaddexp(self._lt + sums[0], self._l1t + sums[1])

    def to_config(self) -> dict:
        s = self.spec
        return {"kind": "mixture", "sigma": list(s.sigma), "omega": list(s.omega), "t": s.t}


class IdentitySequence(_TypeSequence):
    """omega_n = I on (C^d)^{(x)n}; unnormalized, used as a divergence reference."""

    kind = "identity"

    def __init__(self, dim: int):
        self.rows = np.zeros((1, dim))

    def combine(self, sums):
        return sums[0]

    def spectrum(self, n):
        raise ValidationError("the identity sequence is not a state")

    def to_config(self) -> dict:
        return {"kind": "identity", "dim": self.local_dim}


class DenseListSequence(StateSequence):
    """Explicit dense states, one per copy count.

    ``dims`` optionally records the bipartite split (dim_A, dim_B) of each
    state for conditional quantities.
    """

    kind = "dense_list"

    def __init__(self, states: Mapping[int, np.ndarray], dims: Mapping[int, tuple] | None = None):
        self.states = {int(n): ops.as_density(rho, f"rho_{n}") for n, rho in states.items()}
        self.dims = {int(n): tuple(d) for n, d in (dims or {}).items()}

    def dense(self, n: int) -> np.ndarray:
        if n not in self.states:
            raise ValidationError(f"no state supplied for n={n}")
        return self.states[n]

    def bipartite_dims(self, n: int) -> tuple[int, int]:
        if n not in self.dims:
            raise ValidationError(f"no bipartite dims recorded for n={n}")
        return self.dims[n]

    def to_config(self) -> dict:
        return {"kind": "dense_list", "states": {str(n): ops.matrix_to_json(r) for n, r in sorted(self.states.items())},
                "dims": {str(n): list(d) for n, d in sorted(self.dims.items())}}


class PurifiedSequence(StateSequence):
    """Pure bipartite |phi_n> whose reduced state on either side is ``base`` at n."""

    kind = "purified"

    def __init__(self, base: StateSequence):
        self.base = base
        self.structured = base.structured

    def spectrum(self, n: int) -> StructuredSpectrum:
        """Schmidt spectrum of |phi_n>."""
        return self.base.spectrum(n)

    def state(self, n: int) -> ops.PureBipartiteState:
        if isinstance(self.base, _TypeSequence) and getattr(self.base, "matrix", None) is None:
            diag = self.base.diagonal(n)
            return ops.PureBipartiteState(np.diag(np.sqrt(diag / diag.sum())).astype(complex))
        w, v = np.linalg.eigh(self.base.dense(n))
        w = np.clip(w, 0, None)
        return ops.PureBipartiteState(v * np.sqrt(w / w.sum()))

    def dense(self, n: int) -> np.ndarray:
        return self.state(n).density()

    def bipartite_dims(self, n: int) -> tuple[int, int]:
        return self.state(n).dims

    def to_config(self) -> dict:
        return {"kind": "purified", "of": self.base.to_config()}


def iid_sequence(rho0) -> IIDSequence:
    return IIDSequence(rho0)


def mixture_sequence(spec: MixtureSpec) -> MixtureSequence:
    return MixtureSequence(spec)


def purify(seq: StateSequence) -> PurifiedSequence:
    return PurifiedSequence(seq)


def noncommuting_mixture(sigma, omega, t: float, n_values) -> DenseListSequence:
    """t sigma^{(x)n} + (1-t) omega^{(x)n} for arbitrary densities, n <= 12."""
    sigma = ops.as_density(sigma, "sigma")
    omega = ops.as_density(omega, "omega")
    if not 0 < t < 1:
        raise ValidationError("t must lie in (0, 1)")
    states = {}
    for n in n_values:
        if n > MAX_NONCOMMUTING_N:
            raise ResourceLimitError(f"non-commuting mixtures are limited to n <= {MAX_NONCOMMUTING_N}")
        states[n] = t * ops.kron_power(sigma, n) + (1 - t) * ops.kron_power(omega, n)
    return DenseListSequence(states)


def _config_spectrum(values, name):
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError(f"{name} must be a non-empty list of numbers")
    if v.min() < 0:
        raise ValidationError(f"{name} has negative entries")
    if abs(v.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"{name} sums to {v.sum()!r}, expected 1 within {NORMALIZATION_TOL}")
    return v / v.sum()


def sequence_from_config(cfg: Mapping) -> StateSequence:
    """Build a sequence from its JSON description.

    >>> sequence_from_config({"kind": "iid", "spectrum": [0.75, 0.25]}).kind
    'iid'
    """
    if not isinstance(cfg, Mapping) or "kind" not in cfg:
        raise ValidationError("sequence config must be an object with a 'kind' field")
    kind = cfg["kind"]
    if kind == "iid":
        return IIDSequence(_config_spectrum(cfg["spectrum"], "spectrum"))
    if kind == "mixture":
        spec = MixtureSpec(tuple(_config_spectrum(cfg["sigma"], "sigma")),
                           tuple(_config_spectrum(cfg["omega"], "omega")), float(cfg["t"]))
        return MixtureSequence(spec)
    if kind == "dense_list":
        states = {int(n): ops.matrix_from_json(m) for n, m in cfg["states"].items()}
        dims = {int(n): tuple(d) for n, d in cfg.get("dims", {}).items()}
        return DenseListSequence(states, dims)
    if kind == "purified":
        return PurifiedSequence(sequence_from_config(cfg["of"]))
    raise ValidationError(f"unknown sequence kind {kind!r}")
