"""Dense symmetric/Hermitian linear algebra used across the package.

All logarithms are base 2. Eigenvalues in ``[-NEG_TOL, CLIP]`` count as zero
when taking logarithms; anything below ``-NEG_TOL`` is an error.
"""

from __future__ import annotations

import math

import numpy as np

CLIP = 1e-12
NEG_TOL = 1e-10
HERMITIAN_TOL = 1e-12
LOG2E = math.log2(math.e)


class Degenerate:
    """Marker for a log-determinant or entropy equal to minus infinity.

    Deliberately not a float: arithmetic on it raises, so a degenerate value
    cannot silently propagate. ``float(DEGENERATE)`` gives ``-inf`` when an
    explicit conversion is wanted, and it orders below every real number.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DEGENERATE"

    def __str__(self):
        return "-inf"

    def __float__(self):
        return float("-inf")

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self


DEGENERATE = Degenerate()


def is_degenerate(value) -> bool:
    return value is DEGENERATE


def _as_finite(a, dtype) -> np.ndarray:
    a = np.asarray(a, dtype=dtype)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def symmetrize(a) -> np.ndarray:
    a = _as_finite(a, float)
    return 0.5 * (a + a.T)


def eig_sym(a) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of ``(a + a.T)/2``."""
    return np.linalg.eigh(symmetrize(a))


def expm_sym(a, t: float = 1.0) -> np.ndarray:
    """``exp(t*a)`` for symmetric ``a`` through its eigendecomposition."""
    w, v = eig_sym(a)
    out = (v * np.exp(t * w)) @ v.T
    return 0.5 * (out + out.T)


def eigvals_hermitian(a) -> np.ndarray:
    a = _as_finite(a, complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))


def clip_spectrum(w: np.ndarray) -> np.ndarray:
    """Zero out eigenvalues in the clip band; reject clearly negative ones."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -NEG_TOL:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    return np.where(w <= CLIP, 0.0, w)


def log_det_sym(a):
    """log2 determinant of a PSD symmetric matrix, or :data:`DEGENERATE` if singular."""
    w = clip_spectrum(eig_sym(a)[0])
    if np.any(w == 0.0):
        return DEGENERATE
    return float(np.sum(np.log2(w)))
