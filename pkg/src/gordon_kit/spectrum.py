"""Eigenvalues of finite Dirichlet truncations, for cross-checking certificates.

Shifted QR on the (Hessenberg) tridiagonal matrix with Givens rotations,
Wilkinson shifts and deflation; eigenvectors by inverse iteration.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

MAX_N = 512


class ConvergenceError(ArithmeticError):
    pass


def truncation_matrix(coeffs, N, start=None):
    """The N x N block of the Jacobi operator on indices start..start+N-1."""
    if not 1 <= N <= MAX_N:
        raise ValueError(f"N must lie in 1..{MAX_N}")
    start = coeffs.n_lo if start is None else int(start)
    coeffs.require(start, start + N)
    H = np.zeros((N, N), dtype=np.complex128)
    H[np.arange(N), np.arange(N)] = coeffs.b_slice(start, start + N - 1)
    if N > 1:
        off = coeffs.a_slice(start + 1, start + N - 1)
        H[np.arange(N - 1), np.arange(1, N)] = off
        H[np.arange(1, N), np.arange(N - 1)] = off
    return H


def _givens(x, y):
    """c, s with [[c, s], [-conj(s), c]] @ [x, y] = [r, 0], c real."""
    if y == 0:
        return 1.0, 0j
    if x == 0:
        return 0.0, y.conjugate() / abs(y)
    r = math.hypot(abs(x), abs(y))
    c = abs(x) / r
    s = (x / abs(x)) * y.conjugate() / r
    return c, s


def _wilkinson(a, b, c, d):
    """Eigenvalue of [[a, b], [c, d]] closer to d."""
    tr, det = a + d, a * d - b * c
    disc = np.sqrt(complex(tr * tr / 4 - det))
    l1, l2 = tr / 2 + disc, tr / 2 - disc
    return l1 if abs(l1 - d) <= abs(l2 - d) else l2


def hessenberg_qr_eigenvalues(H, max_iter_per_eig=60, tol=None):
    """All eigenvalues of an upper Hessenberg matrix (a copy is modified)."""
    H = np.array(H, dtype=np.complex128)
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError("square matrix expected")
    tol = np.finfo(float).eps if tol is None else tol
    eig = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    iters = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        # find the start of the trailing unreduced block
        l = hi
        while l > 0:
            scale = abs(H[l, l]) + abs(H[l - 1, l - 1])
            if scale == 0:
                scale = np.abs(H[: hi + 1, : hi + 1]).max()
            if abs(H[l, l - 1]) <= tol * scale:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            iters = 0
            continue
        iters += 1
        if iters > max_iter_per_eig:
            raise ConvergenceError(f"QR iteration did not converge for eigenvalue {hi}")
        if iters % 11 == 0:
            sigma = H[hi, hi] + abs(H[hi, hi - 1]) * (0.75 + 0.5j)
        else:
            sigma = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        # one shifted QR step on rows/cols l..hi
        idx = np.arange(l, hi + 1)
        H[idx, idx] -= sigma
        rots = []
        for k in range(l, hi):
            c, s = _givens(complex(H[k, k]), complex(H[k + 1, k]))
            G = np.array([[c, s], [-s.conjugate(), c]])
            H[k : k + 2, k : hi + 1] = G @ H[k : k + 2, k : hi + 1]
            rots.append(G)
        for k, G in zip(range(l, hi), rots):
            top = min(k + 2, hi)
            H[l : top + 1, k : k + 2] = H[l : top + 1, k : k + 2] @ G.conj().T
        H[idx, idx] += sigma
    return eig


@dataclass(frozen=True)
class Eigenpair:
    value: complex
    residual: float
    edge_mass: float
    vector: np.ndarray


def _inverse_iteration(H, lam, steps=4):
    """Approximate eigenvector for ``lam`` of the tridiagonal ``H``."""
    n = H.shape[0]
    if n == 1:
        return np.ones(1, dtype=np.complex128)
    scale = max(np.abs(H).max(), 1.0)
    shift = lam + 1e3 * np.finfo(float).eps * scale * (1 + 1j)
    band = np.zeros((3, n), dtype=np.complex128)
    band[0, 1:] = np.diagonal(H, 1)
    band[1] = np.diagonal(H) - shift
    band[2, :-1] = np.diagonal(H, -1)
    v = np.ones(n, dtype=np.complex128) / math.sqrt(n)
    for _ in range(steps):
        try:
            w = solve_banded((1, 1), band, v)
        except np.linalg.LinAlgError:
            band[1] += 1e-12 * scale
            w = solve_banded((1, 1), band, v)
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0:
            break
        v = w / nw
    return v


def truncated_spectrum_report(coeffs, N, start=None, edge_fraction=0.1):
    """Eigenpairs of the truncation with residuals and edge mass, sorted by (re, im)."""
    H = truncation_matrix(coeffs, N, start)
    vals = hessenberg_qr_eigenvalues(H)
    norm_h = float(np.linalg.norm(H, 2)) if N > 1 else abs(H[0, 0])
    edge = max(1, math.ceil(edge_fraction * N))
    out = []
    for lam in sorted(vals, key=lambda v: (v.real, v.imag)):
        v = _inverse_iteration(H, lam)
        res = float(np.linalg.norm(H @ v - lam * v))
        w = np.abs(v) ** 2
        mass = float((w[:edge].sum() + w[-edge:].sum()) / w.sum()) if N > 2 * edge else 1.0
        out.append(Eigenpair(complex(lam), res, mass, v))
    bad = [p for p in out if p.residual > 1e-8 * max(norm_h, 1e-300)]
    if bad:
        raise ConvergenceError(
            f"{len(bad)} eigenpair(s) exceed the residual tolerance, e.g. lambda={bad[0].value:.6g}"
        )
    return out


def truncated_spectrum(coeffs, N, start=None):
    """Eigenvalues of the N x N Dirichlet truncation, sorted by (re, im)."""
    return [p.value for p in truncated_spectrum_report(coeffs, N, start)]
