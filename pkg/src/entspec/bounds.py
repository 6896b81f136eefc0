"""Finite-n upper bounds on distillation fidelity, and the dense-coding capacity.

Both bounds split as ``term_projection + term_rank``: the trace functional
of rho - e^{n gamma} omega for a reference omega, plus e^{n gamma} / M.  The
coherent-information form uses omega = I (x) rho_B of the protocol output;
the relative-entropy form uses a separable omega.  Each evaluation is a
valid bound instance, so candidate lists reduce by max (over protocol
outputs) or min (over separable references).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import operators as ops
from .errors import ValidationError


@dataclass(frozen=True)
class BoundReport:
    n: int
    gamma: float
    log_M: float
    term_projection: float
    term_rank: float
    label: str = ""

    @property
    def total(self) -> float:
        return self.term_projection + self.term_rank

    @property
    def vacuous(self) -> bool:
        return self.total >= 1.0 - 1e-12

    def row(self) -> dict:
        return {"n": self.n, "gamma": self.gamma, "log_M": self.log_M, "term_projection": self.term_projection,
                "term_rank": self.term_rank, "total": self.total, "vacuous": self.vacuous, "label": self.label}


def _log_rank(M, log_M):
    if log_M is not None:
        return float(log_M)
    if M is None or M < 1:
        raise ValidationError("M must be a positive integer")
    return math.log(M)


def _report(rho, omega, gamma, log_m, n, label):
    term = ops.positive_part_trace(rho - math.exp(n * gamma) * omega)
    return BoundReport(n, gamma, log_m, max(term, 0.0), math.exp(n * gamma - log_m), label)


def coherent_fidelity_bound(omega_ab, dims, gamma: float, M: int | None = None, n: int = 1, *,
                            log_M: float | None = None, label: str = "") -> BoundReport:
    """F_n <= Tr[{w >= e^{n g} I(x)w_B}(w - e^{n g} I(x)w_B)] + e^{n g}/M.

    ``omega_ab`` is the state after the protocol's map on A (x) B with
    ``dims = (dim_A, dim_B)``.
    """
    w = ops.as_density(omega_ab, "omega_AB")
    da, db = dims
    if w.shape[0] != da * db:
        raise ValidationError(f"omega_AB has dimension {w.shape[0]}, dims give {da * db}")
    w_b = ops.partial_trace_density(w, dims, keep="B")
    return _report(w, np.kron(np.eye(da), w_b), gamma, _log_rank(M, log_M), n, label)


def relent_fidelity_bound(rho_ab, sigma_ab, gamma: float, M: int | None = None, n: int = 1, *,
                          log_M: float | None = None, label: str = "") -> BoundReport:
    """F_n <= Tr[{rho >= e^{n g} sigma}(rho - e^{n g} sigma)] + e^{n g}/M for separable sigma.

    Separability of ``sigma_ab`` is the caller's responsibility; build it with
    :func:`separable_from_factors` or ``random_separable``.
    """
    rho = ops.as_density(rho_ab, "rho_AB")
    sigma = ops.as_density(sigma_ab, "sigma_AB")
    if rho.shape != sigma.shape:
        raise ValidationError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    return _report(rho, sigma, gamma, _log_rank(M, log_M), n, label)


def best_relent_bound(rho_ab, candidates: Iterable, gamma: float, M=None, n: int = 1, *, log_M=None) -> BoundReport:
    """Tightest (smallest) relative-entropy bound over labelled separable candidates."""
    reports = [relent_fidelity_bound(rho_ab, s, gamma, M, n, log_M=log_M, label=str(lbl))
               for lbl, s in _labelled(candidates)]
    if not reports:
        raise ValidationError("no separable candidates given")
    return min(reports, key=lambda r: (r.total, r.label))


def worst_coherent_bound(rho_ab, dims, maps: Iterable, gamma: float, M=None, n: int = 1, *,
                         log_M=None) -> BoundReport:
    """Largest coherent bound over candidate protocol maps (lists of Kraus operators).

    Each map must output on a space of the same ``dims``.
    """
    reports = [coherent_fidelity_bound(ops.apply_kraus(k, rho_ab), dims, gamma, M, n, log_M=log_M, label=str(lbl))
               for lbl, k in _labelled(maps)]
    if not reports:
        raise ValidationError("no candidate maps given")
    return max(reports, key=lambda r: (r.total, r.label))


def _labelled(items):
    if isinstance(items, Mapping):
        return sorted(items.items())
    return list(enumerate(items))


def dense_coding_capacity(e_d_estimate: float, d: int) -> float:
    """log d + E_D in nats."""
    if d < 2:
        raise ValidationError("channel dimension must be at least 2")
    if e_d_estimate < 0:
        raise ValidationError("distillable entanglement estimate must be nonnegative")
    return math.log(d) + e_d_estimate


# -- separable references -------------------------------------------------------------


def separable_from_factors(weights, factors) -> np.ndarray:
    """sum_i w_i A_i (x) B_i for densities A_i, B_i and a probability vector w."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != len(factors) or w.size == 0:
        raise ValidationError("need one weight per product factor")
    if w.min() < 0 or abs(w.sum() - 1) > 1e-9:
        raise ValidationError("weights must be a probability vector")
    terms = []
    for wi, (a, b) in zip(w, factors):
        terms.append(wi * np.kron(ops.as_density(a, "factor A"), ops.as_density(b, "factor B")))
    return sum(terms)


def separable_from_json(data: Mapping) -> np.ndarray:
    """Parse ``{"weights": [...], "factors": [[A, B], ...]}`` with matrices as [re, im] rows."""
    try:
        factors = [(ops.matrix_from_json(a), ops.matrix_from_json(b)) for a, b in data["factors"]]
        return separable_from_factors(data["weights"], factors)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed separable candidate: {exc}") from exc


def product_of_marginals(rho_ab, dims) -> np.ndarray:
    rho = np.asarray(rho_ab, dtype=complex)
    return np.kron(ops.partial_trace_density(rho, dims, "A"), ops.partial_trace_density(rho, dims, "B"))


def schmidt_dephased(state: ops.PureBipartiteState) -> np.ndarray:
    """sum_i lam_i |i i><i i| in the Schmidt basis, a classically correlated state."""
    u, s, vh = np.linalg.svd(state.amplitudes)
    lam = s**2
    out = np.zeros((state.amplitudes.size,) * 2, dtype=complex)
    for i, l in enumerate(lam):
        if l > 0:
            v = np.kron(u[:, i], vh[i, :])
            out += l * np.outer(v, v.conj())
    return out


def natural_candidates(state: ops.PureBipartiteState) -> dict:
    """Separable references for a pure state: product of marginals and Schmidt dephasing."""
    rho = state.density()
    return {"product_of_marginals": product_of_marginals(rho, state.dims),
            "schmidt_dephased": schmidt_dephased(state)}
