"""Dense complex linear algebra: Hermitian eigensolver, Householder QR, projectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (BlockOutOfRange, ConvergenceFailure, NonFiniteInput,
                     NotHermitian, ShapeMismatch)

ABS_FLOOR = 1e-14
HERMITIAN_RTOL = 1e-10
QL_MAX_ITER = 60


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteInput("matrix has NaN or Inf entries")
    return m


def _tol(scale: float, rtol: float) -> float:
    return max(rtol * scale, ABS_FLOOR)


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def coefficients(self, psi) -> np.ndarray:
        """Amplitudes ``<phi_alpha, psi>`` of a state in the eigenbasis."""
        return self.eigenvectors.conj().T @ np.asarray(psi, dtype=np.complex128)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eigendecomposition(m) -> SpectralData:
    m = _as_matrix(m)
    n, k = m.shape
    if n != k:
        raise NotHermitian(f"matrix is not square: {m.shape}")
    scale = float(np.linalg.norm(m))
    if np.linalg.norm(m - m.conj().T) > _tol(scale, HERMITIAN_RTOL):
        raise NotHermitian("||M - M*||_F exceeds 1e-10 ||M||_F")
    if n == 0:
        return SpectralData(np.empty(0), np.empty((0, 0), dtype=np.complex128))
    # symmetrise so round-off asymmetry never reaches the solver
    herm = 0.5 * (m + m.conj().T)
    w, v, status = _kernels.hermitian_eig(herm, QL_MAX_ITER)
    if status != 0:
        raise ConvergenceFailure(f"implicit QL exceeded {QL_MAX_ITER} sweeps per eigenvalue")
    order = np.argsort(w, kind="stable")
    w = np.ascontiguousarray(w[order])
    v = np.ascontiguousarray(v[:, order])
    w.flags.writeable = False
    v.flags.writeable = False
    return SpectralData(w, v)


def householder_qr(m) -> tuple[np.ndarray, np.ndarray]:
    """QR of a square (or tall) complex matrix; R has a real non-negative diagonal."""
    m = _as_matrix(m)
    if m.shape[0] < m.shape[1]:
        raise ShapeMismatch("householder_qr needs rows >= columns")
    q, r = _kernels.qr_batch(np.ascontiguousarray(m)[None])
    return q[0], r[0]


def householder_qr_batch(stack) -> tuple[np.ndarray, np.ndarray]:
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.ndim != 3 or stack.shape[1] < stack.shape[2]:
        raise ShapeMismatch(f"expected (n, m, k) with m >= k, got {stack.shape}")
    return _kernels.qr_batch(stack)


def _block_slice(block, dim: int) -> slice:
    if isinstance(block, slice):
        if block.step not in (None, 1):
            raise BlockOutOfRange(f"block {block} must have unit step")
        start = 0 if block.start is None else block.start
        stop = dim if block.stop is None else block.stop
    else:
        start, stop = block
    start, stop = int(start), int(stop)
    if not (0 <= start <= stop <= dim):
        raise BlockOutOfRange(f"block [{start}, {stop}) outside [0, {dim})")
    return slice(start, stop)


def apply_projector(frame, block, psi) -> np.ndarray:
    """Orthogonal projection of ``psi`` onto the span of ``frame[:, block]``.

    ``block`` is a ``(start, stop)`` pair or a unit-step slice.
    """
    frame = np.asarray(frame, dtype=np.complex128)
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (frame.shape[0],):
        raise ShapeMismatch(f"state of shape {psi.shape} for a frame of {frame.shape[0]} rows")
    b = frame[:, _block_slice(block, frame.shape[1])]
    return b @ (b.conj().T @ psi)
