"""Weyl operators, mutually unbiased bases, and the associated dephasing maps.

For prime ``d`` the ``d**2 - 1`` nontrivial Weyl operators split into ``d + 1``
classes of ``d - 1`` mutually commuting unitaries; the common eigenbases of the
classes form a complete family of ``d + 1`` mutually unbiased bases.  Each
basis carries a full-dephasing channel (projector pinching) and a mixing map
built from the powers of one unitary with spectrum ``{omega**l}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    InternalConsistencyError,
    InvalidInputError,
    UnsupportedDimensionError,
)
from .linalg import KrausMap, as_square_matrix

#: amplitudes below this are treated as zero when fixing eigenvector phases
_PHASE_FIX_TOL = 1e-10


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class WeylBasis:
    """All ``d**2`` Weyl operators of dimension ``d``.

    ``operators[k, l]`` is the unitary ``X**l Z**k`` built from the cyclic
    shift ``X|m> = |m+1>`` and the clock ``Z|m> = omega**m |m>``.
    """

    dim: int
    operators: np.ndarray  # shape (d, d, d, d), indexed [k, l]
    omega: complex

    def op(self, k: int, l: int) -> np.ndarray:
        """W_{kl} with indices reduced mod d."""
        return self.operators[k % self.dim, l % self.dim]


def weyl_basis(d: int) -> WeylBasis:
    """Construct every W_{kl} = X^l Z^k for dimension ``d`` >= 2.

    The entries are roots of unity: (W_{kl})[m+l mod d, m] = omega**(k m).
    """
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise DimensionError(f"dimension must be an integer >= 2, got {d!r}")
    d = int(d)
    omega = np.exp(2j * np.pi / d)
    ops = np.zeros((d, d, d, d), dtype=complex)
    m = np.arange(d)
    for k in range(d):
        phases = omega ** ((k * m) % d)
        for l in range(d):
            ops[k, l][(m + l) % d, m] = phases
    ops.setflags(write=False)
    return WeylBasis(dim=d, operators=ops, omega=omega)


def commuting_classes(basis: WeylBasis) -> tuple:
    """Partition the nontrivial Weyl operators into d+1 commuting classes.

    Each class is the orbit {W_{ak mod d, al mod d} : a = 1..d-1} of a seed.
    Seeds are ordered Z, X, XZ, ..., XZ^(d-1), i.e. index pairs
    (1,0), (0,1), (1,1), ..., (d-1,1).  Requires prime ``d``: only then do the
    orbits partition all d^2 - 1 index pairs.

    Returns a tuple of classes; each class is a tuple of (k, l) index pairs.
    """
    d = basis.dim
    if not is_prime(d):
        raise UnsupportedDimensionError(f"commuting classes need prime d, got {d}")
    seeds = [(1, 0)] + [(k, 1) for k in range(d)]
    classes = tuple(
        tuple(((a * k) % d, (a * l) % d) for a in range(1, d)) for (k, l) in seeds
    )
    covered = {pair for cls in classes for pair in cls}
    if len(covered) != d * d - 1:
        raise InternalConsistencyError("Weyl class orbits failed to partition the index set")
    return classes


@dataclass(frozen=True)
class MubFamily:
    """A complete family of d+1 mutually unbiased bases for prime d.

    ``bases[a, l]`` is the l-th unit vector of basis ``alpha = a + 1``;
    ``unitaries[a]`` is U_alpha = sum_l omega**l |psi_l><psi_l|, a unitary with
    spectrum exactly {omega**l}.  Basis alpha=1 is the eigenbasis of Z (the
    computational basis), followed by the eigenbases of X, XZ, ..., XZ^(d-1).
    """

    dim: int
    bases: np.ndarray      # (d+1, d, d): [basis, vector, component]
    unitaries: np.ndarray  # (d+1, d, d)
    omega: complex

    @property
    def n_bases(self) -> int:
        return self.dim + 1

    def _check_alpha(self, alpha: int) -> int:
        if not 1 <= alpha <= self.dim + 1:
            raise InvalidInputError(f"basis index must be in 1..{self.dim + 1}, got {alpha}")
        return alpha - 1

    def basis_vectors(self, alpha: int) -> np.ndarray:
        return self.bases[self._check_alpha(alpha)]

    def projector(self, alpha: int, l: int) -> np.ndarray:
        v = self.bases[self._check_alpha(alpha)][l]
        return np.outer(v, v.conj())

    def unitary(self, alpha: int) -> np.ndarray:
        return self.unitaries[self._check_alpha(alpha)]

    def to_json_dict(self) -> dict:
        """JSON form: complex amplitudes as [re, im] pairs (schema in README)."""
        return {
            "dim": self.dim,
            "bases": [
                [[[float(c.real), float(c.imag)] for c in vec] for vec in basis]
                for basis in self.bases
            ],
        }


def _phase_fixed(vec: np.ndarray) -> np.ndarray:
    """Rotate a unit vector so its first non-negligible amplitude is real positive."""
    idx = np.flatnonzero(np.abs(vec) > _PHASE_FIX_TOL)
    if idx.size == 0:
        raise InternalConsistencyError("eigenvector has no nonzero amplitude")
    pivot = vec[idx[0]]
    return vec * (pivot.conj() / abs(pivot))


def _sorted_eigenbasis(g: np.ndarray, d: int) -> np.ndarray:
    """Eigenvectors of a unitary with spectrum {c * omega**l}, sorted by l.

    The spectrum is non-degenerate and equally spaced on the unit circle, so
    each eigenvalue snaps onto a unique multiple of 2*pi/d above the smallest
    phase; that multiple orders the vectors.
    """
    vals, vecs = np.linalg.eig(g)
    theta = np.mod(np.angle(vals), 2.0 * np.pi)
    ranks = np.rint((theta - theta.min()) * d / (2.0 * np.pi)).astype(int) % d
    if sorted(ranks) != list(range(d)):
        raise InternalConsistencyError("eigenvalue phases of a Weyl operator did not separate")
    out = np.zeros((d, d), dtype=complex)
    for col, r in enumerate(ranks):
        v = vecs[:, col]
        out[r] = _phase_fixed(v / np.linalg.norm(v))
    return out


def mub_family(d: int) -> MubFamily:
    """Build the complete MUB family for prime ``d`` from Weyl eigenbases.

    Raises :class:`UnsupportedDimensionError` for non-prime ``d`` (the
    prime-power field construction is not implemented here).
    """
    basis = weyl_basis(d)
    if not is_prime(basis.dim):
        raise UnsupportedDimensionError(
            f"complete MUB construction requires prime d, got {d}"
        )
    classes = commuting_classes(basis)
    omega = basis.omega
    bases = np.zeros((d + 1, d, d), dtype=complex)
    unitaries = np.zeros((d + 1, d, d), dtype=complex)
    for a, cls in enumerate(classes):
        k, l = cls[0]  # orbit seed: Z or XZ^k
        vectors = _sorted_eigenbasis(basis.operators[k, l], d)
        bases[a] = vectors
        unitaries[a] = sum(
            omega**m * np.outer(vectors[m], vectors[m].conj()) for m in range(d)
        )
    bases.setflags(write=False)
    unitaries.setflags(write=False)
    return MubFamily(dim=d, bases=bases, unitaries=unitaries, omega=omega)


# ---------------------------------------------------------------------------
# Dephasing and mixing maps attached to one basis
# ---------------------------------------------------------------------------


def decoherence_channel(family: MubFamily, alpha: int) -> KrausMap:
    """Full dephasing in basis ``alpha``: rho -> sum_l P_l rho P_l."""
    a = family._check_alpha(alpha)
    projs = tuple(
        np.outer(family.bases[a][l], family.bases[a][l].conj()) for l in range(family.dim)
    )
    return KrausMap(dim=family.dim, operators=projs)


def unitary_mixing_map(family: MubFamily, alpha: int) -> KrausMap:
    """The map rho -> sum_{k=1}^{d-1} U_alpha^k rho U_alpha^(k dag).

    Identically equal to d*(dephasing in basis alpha) - identity.
    """
    u = family.unitary(alpha)
    powers = []
    acc = np.eye(family.dim, dtype=complex)
    for _ in range(family.dim - 1):
        acc = acc @ u
        powers.append(acc)
    return KrausMap(dim=family.dim, operators=tuple(powers))


def dephase_all(family: MubFamily, rho) -> np.ndarray:
    """Apply every basis dephasing at once; returns shape (d+1, d, d).

    Used on the hot path of channel application: for each basis the pinching
    is a change of basis, a diagonal extraction, and the reverse rebuild.
    """
    arr = as_square_matrix(rho)
    if arr.shape[0] != family.dim:
        raise DimensionError(f"state has dimension {arr.shape[0]}, family is {family.dim}")
    diag = np.einsum("alm,mn,aln->al", family.bases.conj(), arr, family.bases)
    return np.einsum("al,alm,aln->amn", diag, family.bases, family.bases.conj())


def unbiasedness_table(family: MubFamily) -> list:
    """All cross-basis squared overlaps, as (alpha, beta, k, l, |<psi|phi>|^2) rows."""
    rows = []
    n = family.n_bases
    overlaps = np.einsum("akm,blm->abkl", family.bases.conj(), family.bases)
    sq = np.abs(overlaps) ** 2
    for a in range(n):
        for b in range(a + 1, n):
            for k in range(family.dim):
                for l in range(family.dim):
                    rows.append((a + 1, b + 1, k, l, float(sq[a, b, k, l])))
    return rows
