"""Closed-form linear algebra for 2x2 complex matrices.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``.  Every routine here works from explicit formulas so that
results are deterministic and exact up to rounding.
"""

import math

import numpy as np

#: |det| below this is treated as singular.
SINGULAR_DET = 1e-14
#: |det - 1| below this, relative to |a11 a22| + |a12 a21|, is treated as unimodular.
UNIMODULAR_TOL = 1e-12


class SingularMatrixError(ArithmeticError):
    pass


def mat2(a11, a12, a21, a22):
    """Build a 2x2 complex matrix from row-major entries."""
    return np.array([[a11, a12], [a21, a22]], dtype=np.complex128)


def identity():
    return np.eye(2, dtype=np.complex128)


def as_mat2(A):
    A = np.asarray(A, dtype=np.complex128)
    if A.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def mat2_det(A):
    return complex(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])


def mat2_inverse(A):
    """Inverse of a 2x2 matrix.

    Unimodular inputs get the adjugate with no division, which keeps the
    determinant-one structure intact.  The unimodularity test is relative
    to the size of the two products, since that is the rounding scale of
    the computed determinant.
    """
    A = as_mat2(A)
    det = mat2_det(A)
    if abs(det) < SINGULAR_DET:
        raise SingularMatrixError(f"|det| = {abs(det):.3e} below {SINGULAR_DET}")
    adj = mat2(A[1, 1], -A[0, 1], -A[1, 0], A[0, 0])
    scale = max(1.0, abs(A[0, 0] * A[1, 1]) + abs(A[0, 1] * A[1, 0]))
    if abs(det - 1) <= UNIMODULAR_TOL * scale:
        return adj
    return adj / det


def mat2_norm2(A):
    """Spectral norm from the eigenvalues of the Hermitian matrix A*A."""
    A = np.asarray(A, dtype=np.complex128)
    fro2 = float(np.sum(A.real**2 + A.imag**2))
    det2 = abs(mat2_det(A)) ** 2
    disc = max(fro2 * fro2 - 4.0 * det2, 0.0)
    return math.sqrt(0.5 * (fro2 + math.sqrt(disc)))


def mat2_norm_1_inf(A):
    """Return (max absolute column sum, max absolute row sum)."""
    M = np.abs(np.asarray(A, dtype=np.complex128))
    return float(M.sum(axis=0).max()), float(M.sum(axis=1).max())


def mat2_adjugate(A):
    return mat2(A[1, 1], -A[0, 1], -A[1, 0], A[0, 0])
