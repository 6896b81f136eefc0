"""Dense linear algebra for Hermitian and density operators.

Everything here works on plain ``numpy`` arrays; validation helpers turn
arbitrary array-likes into checked complex matrices.  Entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import ResourceLimitError, ValidationError

MAX_DENSE_DIM = 4096
MAX_RANDOM_DIM = 64

HERMITIAN_RTOL = 1e-12
DENSITY_TOL = 1e-12
SPECTRUM_TOL = 1e-10
SCHMIDT_TRIM = 1e-14
UNITARY_TOL = 1e-10


def check_dense_dim(dim: int) -> None:
    if dim > MAX_DENSE_DIM:
        raise ResourceLimitError(f"dense dimension {dim} exceeds cap {MAX_DENSE_DIM}")


def as_hermitian(a, name: str = "operator") -> np.ndarray:
    """Validate a square self-adjoint matrix and return it symmetrized."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    check_dense_dim(a.shape[0])
    scale = np.abs(a).max()
    if np.abs(a - a.conj().T).max() > HERMITIAN_RTOL * max(scale, 1.0):
        raise ValidationError(f"{name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def as_density(a, name: str = "density") -> np.ndarray:
    rho = as_hermitian(a, name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > DENSITY_TOL * max(1.0, rho.shape[0]):
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -DENSITY_TOL * max(1.0, rho.shape[0]):
        raise ValidationError(f"{name} is not positive semidefinite")
    return rho


def as_spectrum(values, tol: float = SPECTRUM_TOL) -> np.ndarray:
    """Validate a probability spectrum and return it sorted descending."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValidationError("spectrum is empty")
    if not np.all(np.isfinite(v)) or v.min() < -tol:
        raise ValidationError("spectrum entries must be finite and nonnegative")
    if abs(v.sum() - 1.0) > tol:
        raise ValidationError(f"spectrum sums to {v.sum()!r}, expected 1")
    return np.sort(np.clip(v, 0.0, None))[::-1]


def spectral_decompose(h):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    values : ndarray
        Real eigenvalues in descending order.
    vectors : ndarray
        Orthonormal eigenvectors as columns, matching ``values``.
    """
    h = as_hermitian(h)
    w, v = np.linalg.eigh(h)
    return w[::-1], v[:, ::-1]


def _nonneg_mask(w: np.ndarray) -> np.ndarray:
    # closed condition lambda >= 0 with a relative tie band
    scale = np.abs(w).max() if w.size else 0.0
    return w >= -1e-12 * scale


def positive_projection(a) -> np.ndarray:
    """Projector {A >= 0} onto the eigenspace of nonnegative eigenvalues."""
    w, v = spectral_decompose(a)
    keep = v[:, _nonneg_mask(w)]
    return keep @ keep.conj().T


def spectral_compare(a, b) -> np.ndarray:
    """Projector {A >= B}, i.e. {A - B >= 0}."""
    a = as_hermitian(a, "A")
    b = as_hermitian(b, "B")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch {a.shape} vs {b.shape}")
    return positive_projection(a - b)


def positive_part_trace(a) -> float:
    """Tr[{A >= 0} A], the sum of the nonnegative eigenvalues."""
    w = np.linalg.eigvalsh(as_hermitian(a))
    return float(np.sum(w[_nonneg_mask(w)]))


@dataclass(frozen=True)
class PureBipartiteState:
    """A unit vector on A (x) B stored as its coefficient matrix.

    ``amplitudes[i, j]`` is the coefficient of ``|i> (x) |j>``.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 2 or 0 in amp.shape:
            raise ValidationError("amplitudes must be a non-empty 2-d array")
        check_dense_dim(max(amp.shape))
        norm = np.sum(np.abs(amp) ** 2)
        if abs(norm - 1.0) > 1e-12 * max(1, amp.size) ** 0.5:
            raise ValidationError(f"state has squared norm {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim_a(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dim_b(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def dims(self) -> tuple[int, int]:
        return self.amplitudes.shape

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def density(self) -> np.ndarray:
        check_dense_dim(self.amplitudes.size)
        psi = self.vector
        return np.outer(psi, psi.conj())

    @classmethod
    def from_vector(cls, psi, dim_a: int, dim_b: int) -> "PureBipartiteState":
        return cls(np.asarray(psi, dtype=complex).reshape(dim_a, dim_b))

    @classmethod
    def from_schmidt(cls, spectrum, dim_a: int | None = None, dim_b: int | None = None):
        """Diagonal state sum_i sqrt(lambda_i)|i>|i> in the computational basis."""
        lam = as_spectrum(spectrum)
        k = lam.size
        amp = np.zeros((dim_a or k, dim_b or k), dtype=complex)
        amp[np.arange(k), np.arange(k)] = np.sqrt(lam)
        return cls(amp)


def partial_trace(state: PureBipartiteState, side: str = "A") -> np.ndarray:
    """Reduced density matrix of a pure bipartite state.

    ``side="A"`` returns Tr_B of the state (the operator living on A).
    """
    amp = state.amplitudes
    if side == "A":
        rho = amp @ amp.conj().T
    elif side == "B":
        rho = amp.T @ amp.conj()
    else:
        raise ValidationError(f"side must be 'A' or 'B', got {side!r}")
    return 0.5 * (rho + rho.conj().T)


def partial_trace_density(rho, dims: Sequence[int], keep: str = "A") -> np.ndarray:
    """Partial trace of a density matrix on A (x) B, keeping one side."""
    da, db = dims
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (da * db, da * db):
        raise ValidationError(f"density shape {rho.shape} does not match dims {tuple(dims)}")
    t = rho.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValidationError(f"keep must be 'A' or 'B', got {keep!r}")


def schmidt_spectrum(state: PureBipartiteState) -> np.ndarray:
    """Descending Schmidt coefficients (squared singular values), zeros trimmed."""
    s = np.linalg.svd(state.amplitudes, compute_uv=False)
    lam = np.sort(s**2)[::-1]
    lam = lam[lam > SCHMIDT_TRIM]
    return lam / lam.sum()


def von_neumann_entropy(x) -> float:
    """S = -Tr rho log rho in nats, for a density matrix or a 1-d spectrum."""
    a = np.asarray(x)
    if a.ndim == 1:
        lam = as_spectrum(a)
    else:
        lam = np.linalg.eigvalsh(as_density(a))
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def overlap_fidelity(output, target) -> float:
    """<target| output |target>, clamped to [0, 1]."""
    rho = np.asarray(output, dtype=complex)
    psi = target.vector if isinstance(target, PureBipartiteState) else np.asarray(target, dtype=complex).ravel()
    if rho.shape != (psi.size, psi.size):
        raise ValidationError(f"output shape {rho.shape} does not match target dim {psi.size}")
    f = float(np.real(psi.conj() @ rho @ psi))
    if f < -1e-12 or f > 1 + 1e-12:
        raise ValidationError(f"overlap {f!r} outside [0, 1]")
    return min(1.0, max(0.0, f))


def maximally_entangled(m: int) -> PureBipartiteState:
    """|Psi+_M> = M^{-1/2} sum_i |i>|i>."""
    if int(m) != m or m < 1:
        raise ValidationError(f"rank must be a positive integer, got {m!r}")
    m = int(m)
    return PureBipartiteState(np.eye(m, dtype=complex) / np.sqrt(m))


def kron_power(a, n: int) -> np.ndarray:
    a = np.asarray(a)
    check_dense_dim(a.shape[0] ** n)
    out = np.ones((1, 1), dtype=a.dtype) if a.ndim == 2 else np.ones(1, dtype=a.dtype)
    for _ in range(n):
        out = np.kron(out, a)
    return out


def apply_kraus(kraus: Sequence[np.ndarray], rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum(k @ rho @ k.conj().T for k in kraus)


def kraus_completeness_residual(kraus: Sequence[np.ndarray]) -> float:
    d = kraus[0].shape[1]
    s = sum(k.conj().T @ k for k in kraus)
    return float(np.abs(s - np.eye(d)).max())


@dataclass(frozen=True)
class LoccMap:
    """sum_j (U_j (x) K_j) . (U_j (x) K_j)^dagger with unitary U_j on A."""

    terms: list = field(default_factory=list)

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("LOCC map needs at least one term")
        terms = [(np.asarray(u, dtype=complex), np.asarray(k, dtype=complex)) for u, k in self.terms]
        for u, _ in terms:
            if np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() > UNITARY_TOL:
                raise ValidationError("A-side operator is not unitary")
        if kraus_completeness_residual([k for _, k in terms]) > UNITARY_TOL:
            raise ValidationError("B-side operators do not satisfy sum K^dagger K = I")
        object.__setattr__(self, "terms", terms)

    @property
    def dims(self) -> tuple[int, int]:
        u, k = self.terms[0]
        return u.shape[0], k.shape[1]

    def apply(self, rho) -> np.ndarray:
        return apply_kraus([np.kron(u, k) for u, k in self.terms], rho)


# -- seeded random instances -------------------------------------------------


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))


def _ginibre(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_pure_state(rng: np.random.Generator, dim_a: int, dim_b: int | None = None) -> PureBipartiteState:
    dim_b = dim_a if dim_b is None else dim_b
    g = _ginibre(rng, dim_a, dim_b)
    return PureBipartiteState(g / np.linalg.norm(g))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    g = _ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = _ginibre(rng, dim, dim)
    return 0.5 * (g + g.conj().T)


def random_contraction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random positive operator with 0 <= P <= I."""
    u = random_unitary(rng, dim)
    return (u * rng.random(dim)) @ u.conj().T


def random_kraus_map(rng: np.random.Generator, dim: int, n_terms: int | None = None,
                     dim_out: int | None = None) -> list:
    """Kraus operators of a random channel from a Haar isometry (Stinespring)."""
    dim_out = dim_out or dim
    # the isometry needs dim_out * n_terms >= dim
    n_terms = max(n_terms or dim, -(-dim // dim_out))
    u = random_unitary(rng, dim_out * n_terms)
    iso = u[:, :dim]
    return [iso[j * dim_out:(j + 1) * dim_out, :] for j in range(n_terms)]


def random_locc_map(rng: np.random.Generator, dim_a: int, dim_b: int, n_terms: int = 3) -> LoccMap:
    ks = random_kraus_map(rng, dim_b, n_terms)
    return LoccMap([(random_unitary(rng, dim_a), k) for k in ks])


def random_separable(rng: np.random.Generator, dim_a: int, dim_b: int | None = None,
                     n_terms: int | None = None) -> np.ndarray:
    """Convex mixture of at most dim_a*dim_b product densities."""
    dim_b = dim_a if dim_b is None else dim_b
    n_terms = n_terms or int(rng.integers(1, dim_a * dim_b + 1))
    w = rng.dirichlet(np.ones(n_terms))
    sigma = sum(wi * np.kron(random_density(rng, dim_a), random_density(rng, dim_b)) for wi in w)
    return 0.5 * (sigma + sigma.conj().T)


RANDOM_KINDS = ("pure_state", "density", "kraus_map", "separable")


def random_instances(seed: int, dim: int, kind: str):
    """Deterministic test instance of the requested kind.

    ``pure_state`` and ``separable`` live on ``dim x dim``; ``density`` and
    ``kraus_map`` act on a single ``dim``-dimensional space.
    """
    if not 1 <= dim <= MAX_RANDOM_DIM:
        raise ValidationError(f"unsupported dim {dim}; random instances need 1 <= dim <= {MAX_RANDOM_DIM}")
    rng = np.random.default_rng(seed)
    if kind == "pure_state":
        return random_pure_state(rng, dim)
    if kind == "density":
        return random_density(rng, dim)
    if kind == "kraus_map":
        return random_kraus_map(rng, dim)
    if kind == "separable":
        return random_separable(rng, dim)
    raise ValidationError(f"unknown instance kind {kind!r}; expected one of {RANDOM_KINDS}")


# -- JSON payloads ---------------------------------------------------------------


def matrix_to_json(a) -> list:
    """Row-major nested list of [re, im] pairs."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ValidationError("matrix payload must be rows of numbers or of [re, im] pairs")
