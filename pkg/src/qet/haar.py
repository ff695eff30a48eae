"""Haar randomness on U(D), the unit sphere and the space of decompositions.

A decomposition is stored as a full D x D unitary frame whose columns are
cut into contiguous blocks of sizes ``d_1, ..., d_N``; block ``nu`` spans
H_nu and ``P_nu = B_nu B_nu^*``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (BlockOutOfRange, IndexOutOfRange, InvalidProfile,
                     ShapeMismatch)
from .linalg import SpectralData, householder_qr_batch
from .rng import SeedSpec, as_generator, complex_normal

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class DimensionProfile:
    dims: tuple[int, ...]

    def __init__(self, dims):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 2:
            raise InvalidProfile(f"need at least two blocks, got {dims}")
        if any(d < 1 for d in dims):
            raise InvalidProfile(f"block dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def D(self) -> int:
        return sum(self.dims)

    @property
    def N(self) -> int:
        return len(self.dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for d in self.dims:
            out.append(out[-1] + d)
        return tuple(out)

    def block(self, nu: int) -> slice:
        if not 0 <= nu < self.N:
            raise BlockOutOfRange(f"block {nu} not in [0, {self.N})")
        off = self.offsets
        return slice(off[nu], off[nu + 1])


@dataclass(frozen=True)
class Decomposition:
    frame: np.ndarray
    profile: DimensionProfile

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=np.complex128)
        D = self.profile.D
        if f.shape != (D, D):
            raise ShapeMismatch(f"frame shape {f.shape} does not match D={D}")
        if np.linalg.norm(f.conj().T @ f - np.eye(D)) > UNITARY_TOL:
            raise ShapeMismatch("frame is not unitary to 1e-10")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "frame", f)

    @classmethod
    def standard(cls, profile: DimensionProfile) -> "Decomposition":
        return cls(np.eye(profile.D, dtype=np.complex128), profile)

    def basis(self, nu: int) -> np.ndarray:
        return self.frame[:, self.profile.block(nu)]

    def projector(self, nu: int) -> np.ndarray:
        b = self.basis(nu)
        return b @ b.conj().T


def _check_dim(D):
    if int(D) < 1:
        raise ValueError(f"dimension must be >= 1, got {D}")
    return int(D)


def haar_frames(gen: np.random.Generator, D: int, k: int, n: int) -> np.ndarray:
    """``n`` Haar-random D x k isometries (the first k columns of Haar unitaries).

    Householder QR of a D x k complex Ginibre block, with R's diagonal made
    real positive. The first k columns of Q for the full D x D Ginibre matrix
    depend only on its first k columns, so this is exactly the law of the
    leading block of a Haar unitary.
    """
    g = complex_normal(gen, (n, D, k))
    q, _ = householder_qr_batch(g)
    return q


def sample_haar_unitary(rng, D: int) -> np.ndarray:
    D = _check_dim(D)
    return haar_frames(as_generator(rng), D, D, 1)[0]


def sample_haar_unitaries(rng, D: int, n: int) -> np.ndarray:
    D = _check_dim(D)
    return haar_frames(as_generator(rng), D, D, int(n))


def unit_states(gen: np.random.Generator, D: int, n: int) -> np.ndarray:
    """``n`` uniform unit vectors in C^D as rows."""
    z = complex_normal(gen, (n, D))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_unit_state(rng, D: int) -> np.ndarray:
    D = _check_dim(D)
    return unit_states(as_generator(rng), D, 1)[0]


def sample_decomposition(rng, profile: DimensionProfile) -> Decomposition:
    if not isinstance(profile, DimensionProfile):
        profile = DimensionProfile(profile)
    return Decomposition(sample_haar_unitary(rng, profile.D), profile)


def weight(dec: Decomposition, nu: int, psi) -> float:
    """``|P_nu psi|^2``, the probability of finding ``psi`` in block ``nu``."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (dec.profile.D,):
        raise ShapeMismatch(f"state shape {psi.shape} for D={dec.profile.D}")
    amp = dec.basis(nu).conj().T @ psi
    return float(np.real(np.vdot(amp, amp)))


def weights(dec: Decomposition, psi) -> np.ndarray:
    return np.array([weight(dec, nu, psi) for nu in range(dec.profile.N)])


def projector_elements(dec: Decomposition, nu: int, basis) -> np.ndarray:
    """Full matrix ``e[a, b] = <phi_a, P_nu phi_b>`` in an orthonormal basis."""
    phi = basis.eigenvectors if isinstance(basis, SpectralData) else np.asarray(basis, dtype=np.complex128)
    x = dec.basis(nu).conj().T @ phi
    return x.conj().T @ x


def matrix_element(dec: Decomposition, nu: int, basis, alpha: int, beta: int) -> complex:
    phi = basis.eigenvectors if isinstance(basis, SpectralData) else np.asarray(basis, dtype=np.complex128)
    D = phi.shape[1]
    if not (0 <= alpha < D and 0 <= beta < D):
        raise IndexOutOfRange(f"({alpha}, {beta}) outside [0, {D})")
    b = dec.basis(nu)
    return complex(np.vdot(b.conj().T @ phi[:, alpha], b.conj().T @ phi[:, beta]))


def g_parts(e: np.ndarray, d: int, D: int) -> tuple[np.ndarray, np.ndarray]:
    """Off-diagonal and diagonal parts of g for a stack of element matrices.

    ``e`` has shape (..., D, D); returns (max_{a != b} |e_ab|^2,
    max_a (e_aa - d/D)^2) over the last two axes.
    """
    e = np.asarray(e)
    mag = np.abs(e) ** 2
    n = e.shape[-1]
    idx = np.arange(n)
    diag = np.real(e[..., idx, idx])
    if n > 1:
        mag = mag.copy()
        mag[..., idx, idx] = -np.inf
        off = np.max(mag, axis=(-2, -1))
    else:
        off = np.zeros(e.shape[:-2])
    dg = np.max((diag - d / D) ** 2, axis=-1)
    return off, dg


def g_nu(dec: Decomposition, nu: int, basis) -> float:
    """Sum of the worst off-diagonal ``|e_ab|^2`` and worst ``(e_aa - d/D)^2``."""
    e = projector_elements(dec, nu, basis)
    off, dg = g_parts(e, dec.profile.dims[nu], dec.profile.D)
    return float(off + dg)


def seminorm_infinity(rho, dec: Decomposition) -> float:
    """``max_nu |Tr(rho P_nu)|``."""
    rho = np.asarray(rho, dtype=np.complex128)
    D = dec.profile.D
    if rho.shape != (D, D):
        raise ShapeMismatch(f"operator shape {rho.shape} for D={D}")
    vals = []
    for nu in range(dec.profile.N):
        b = dec.basis(nu)
        vals.append(abs(np.trace(b.conj().T @ rho @ b)))
    return float(max(vals))


def microcanonical(D: int) -> np.ndarray:
    return np.eye(D, dtype=np.complex128) / D


__all__ = [
    "DimensionProfile", "Decomposition", "SeedSpec", "haar_frames", "sample_haar_unitary",
    "sample_haar_unitaries", "unit_states", "sample_unit_state", "sample_decomposition",
    "weight", "weights", "projector_elements", "matrix_element", "g_parts", "g_nu",
    "seminorm_infinity", "microcanonical",
]
