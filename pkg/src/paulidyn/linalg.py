"""Dense complex matrix primitives: norms, spectra, Hermiticity checks, seeded sampling.

All operators in this package are plain ``numpy`` arrays of shape ``(d, d)``
with complex entries.  Functions here are pure and never mutate their inputs;
dimensions up to a few tens are the intended envelope (everything is dense).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError, NonHermitianError

#: default entrywise tolerance for matrix equality
EQUALITY_TOL = 1e-12
#: default tolerance when deciding whether a matrix counts as Hermitian
HERMITIAN_TOL = 1e-10


def as_square_matrix(x, min_dim: int = 1) -> np.ndarray:
    """Validate and return ``x`` as a square complex matrix.

    Raises :class:`InvalidInputError` on non-finite entries and
    :class:`DimensionError` on anything that is not square of size >= min_dim.
    """
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] < min_dim:
        raise DimensionError(f"matrix dimension {arr.shape[0]} < minimum {min_dim}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise InvalidInputError("matrix has non-finite entries")
    return arr


def dagger(x) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(x).conj().T


def trace_norm(x) -> float:
    """Sum of singular values of ``x`` (equals Tr sqrt(X X^dag))."""
    arr = as_square_matrix(x)
    return float(np.linalg.svd(arr, compute_uv=False).sum())


def frobenius_norm(x) -> float:
    """sqrt(Tr X^dag X)."""
    arr = as_square_matrix(x)
    return float(np.linalg.norm(arr))


def hermiticity_deviation(x) -> float:
    """Largest entrywise deviation of ``x`` from its conjugate transpose."""
    arr = as_square_matrix(x)
    return float(np.abs(arr - arr.conj().T).max())


@dataclass(frozen=True)
class HermitianCheckResult:
    is_hermitian: bool
    max_deviation: float


def hermitian_check(x, tol: float = HERMITIAN_TOL) -> HermitianCheckResult:
    dev = hermiticity_deviation(x)
    return HermitianCheckResult(is_hermitian=dev <= tol, max_deviation=dev)


def min_eigenvalue_hermitian(x, tol: float = HERMITIAN_TOL) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Raises :class:`NonHermitianError` if ``x`` deviates from Hermiticity by
    more than ``tol``; the computation symmetrizes first so the result does not
    depend on sub-tolerance noise.
    """
    arr = as_square_matrix(x)
    dev = float(np.abs(arr - arr.conj().T).max())
    if dev > tol:
        raise NonHermitianError(f"matrix is not Hermitian (max deviation {dev:.3e} > {tol:.1e})")
    return float(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0])


def matrices_close(a, b, tol: float = EQUALITY_TOL) -> bool:
    """Entrywise equality within an absolute tolerance."""
    am = as_square_matrix(a)
    bm = as_square_matrix(b)
    if am.shape != bm.shape:
        raise DimensionError(f"shape mismatch: {am.shape} vs {bm.shape}")
    return bool(np.abs(am - bm).max() <= tol)


@dataclass(frozen=True)
class KrausMap:
    """A map rho -> sum_i K_i rho K_i^dag given by an explicit operator list."""

    dim: int
    operators: tuple

    def __call__(self, rho) -> np.ndarray:
        arr = as_square_matrix(rho)
        if arr.shape[0] != self.dim:
            raise DimensionError(f"state has dimension {arr.shape[0]}, map acts on {self.dim}")
        out = np.zeros_like(arr)
        for k in self.operators:
            out += k @ arr @ k.conj().T
        return out


# ---------------------------------------------------------------------------
# Seeded random generation (property tests, witness searches)
# ---------------------------------------------------------------------------


def random_complex_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    """Ginibre matrix: i.i.d. standard complex Gaussian entries."""
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = random_complex_matrix(d, rng)
    return 0.5 * (g + g.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(random_complex_matrix(d, rng))
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    g = random_complex_matrix(d, rng)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
