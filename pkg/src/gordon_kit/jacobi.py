"""Discrete half: Jacobi difference equations, transfer matrices and the
Gordon-type eigenvalue-free disk.

Conventions follow the three-term recurrence

    a(n+1) u(n+1) + b(n) u(n) + a(n) u(n-1) = z u(n)

with solution states ``(u(n+1), a(n+1) u(n))`` attached to index ``n``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import WindowError
from .mat2c import identity, mat2, mat2_norm2


@dataclass(frozen=True)
class CoeffSeq:
    """Jacobi coefficients ``a(n), b(n)`` for ``n`` in ``[n_lo, n_lo + len - 1]``.

    ``norm_a``, ``norm_ainv`` and ``norm_b`` default to the window suprema.
    They may be supplied larger (e.g. analytic bounds for a generator) but
    never smaller.
    """

    n_lo: int
    a: np.ndarray
    b: np.ndarray
    norm_a: float = None
    norm_ainv: float = None
    norm_b: float = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.complex128)
        b = np.asarray(self.b, dtype=np.complex128)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ValueError("a and b must be nonempty 1-d arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        if np.any(a == 0):
            raise ValueError("a(n) must be nonzero on the whole window")
        object.__setattr__(self, "n_lo", int(self.n_lo))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        sup_a = float(np.abs(a).max())
        sup_ainv = float((1.0 / np.abs(a)).max())
        sup_b = float(np.abs(b).max())
        for name, sup in (("norm_a", sup_a), ("norm_ainv", sup_ainv), ("norm_b", sup_b)):
            given = getattr(self, name)
            if given is None:
                object.__setattr__(self, name, sup)
            elif given < sup * (1 - 1e-12):
                raise ValueError(f"{name}={given} is below the window supremum {sup}")
            else:
                object.__setattr__(self, name, float(given))

    @property
    def n_hi(self):
        return self.n_lo + self.a.size - 1

    def covers(self, lo, hi):
        return self.n_lo <= lo and hi <= self.n_hi

    def require(self, lo, hi):
        if not self.covers(lo, hi):
            raise WindowError(
                f"indices [{lo}, {hi}] not inside coefficient window [{self.n_lo}, {self.n_hi}]"
            )

    def a_at(self, n):
        self.require(n, n)
        return self.a[n - self.n_lo]

    def b_at(self, n):
        self.require(n, n)
        return self.b[n - self.n_lo]

    def a_slice(self, lo, hi):
        self.require(lo, hi)
        return self.a[lo - self.n_lo : hi - self.n_lo + 1]

    def b_slice(self, lo, hi):
        self.require(lo, hi)
        return self.b[lo - self.n_lo : hi - self.n_lo + 1]

    @classmethod
    def from_functions(cls, a_fn, b_fn, n_lo, n_hi, **norms):
        idx = range(n_lo, n_hi + 1)
        return cls(n_lo, [a_fn(n) for n in idx], [b_fn(n) for n in idx], **norms)

    @classmethod
    def constant(cls, a, b, n_lo, n_hi):
        size = n_hi - n_lo + 1
        return cls(n_lo, np.full(size, a, dtype=np.complex128), np.full(size, b, dtype=np.complex128))

    def periodized(self, p, n_lo, n_hi):
        """p-periodic sequence agreeing with ``self`` on a(2..p+1), b(1..p)."""
        self.require(1, p + 1)
        idx = np.arange(n_lo, n_hi + 1)
        a = self.a[(idx - 2) % p + 2 - self.n_lo]
        b = self.b[(idx - 1) % p + 1 - self.n_lo]
        return CoeffSeq(n_lo, a, b, self.norm_a, self.norm_ainv, self.norm_b)


@dataclass(frozen=True)
class State2:
    """The vector ``(u(index+1), a(index+1) u(index))``."""

    top: complex
    bottom: complex
    index: int = 0

    @property
    def vector(self):
        return np.array([self.top, self.bottom], dtype=np.complex128)

    def norm(self):
        return math.hypot(abs(self.top), abs(self.bottom))


@dataclass
class GordonCertificate:
    """Periods p_m, defects d_m, the target rate C and the disk radius.

    ``weighted_defects`` holds ln(e^{C p_m} d_m) when computed; ``log_defects``
    keeps ln d_m for defects too small for a float.
    """

    periods: list
    defects: list
    rate_target: float
    disk_radius: float
    weighted_defects: list = field(default_factory=list)
    decaying: bool = False
    log_defects: list = field(default_factory=list)

    def __post_init__(self):
        if any(q <= p for p, q in zip(self.periods, self.periods[1:])):
            raise ValueError("periods must be strictly increasing")
        if any(d < 0 for d in self.defects) or self.disk_radius < 0:
            raise ValueError("defects and disk radius must be nonnegative")


def transfer_step(coeffs, z, n):
    """One-step transfer matrix M_z(n) taking the state at n to n+1."""
    coeffs.require(n + 1, n + 2)
    a2 = coeffs.a[n + 2 - coeffs.n_lo]
    b1 = coeffs.b[n + 1 - coeffs.n_lo]
    return mat2((z - b1) / a2, -1.0 / a2, a2, 0.0)


def transfer(coeffs, z, m, n):
    """Transfer matrix T_z(m, n) mapping the state at n to the state at m."""
    if m == n:
        return identity()
    lo, hi = min(m, n), max(m, n)
    coeffs.require(lo + 1, hi + 1)
    T = identity()
    if m > n:
        for k in range(lo, hi):
            T = transfer_step(coeffs, z, k) @ T
    else:
        # product of exact step inverses; inverting the forward product
        # would lose the unit determinant once its entries grow large
        for k in range(lo, hi):
            T = T @ _step_inverse(coeffs, z, k)
    return T


def _step_inverse(coeffs, z, n):
    a2 = coeffs.a[n + 2 - coeffs.n_lo]
    b1 = coeffs.b[n + 1 - coeffs.n_lo]
    return mat2(0.0, 1.0 / a2, -a2, (z - b1) / a2)


def _solution_values(coeffs, z, init, lo, hi):
    """u(k) for k in [lo, hi+1] from the recurrence, as a dict."""
    n = init.index
    coeffs.require(min(lo, n) , max(hi, n) + 1)
    u = {n + 1: complex(init.top), n: complex(init.bottom) / coeffs.a_at(n + 1)}
    for k in range(n + 1, hi + 1):
        u[k + 1] = ((z - coeffs.b_at(k)) * u[k] - coeffs.a_at(k) * u[k - 1]) / coeffs.a_at(k + 1)
    for k in range(n, lo, -1):
        u[k - 1] = ((z - coeffs.b_at(k)) * u[k] - coeffs.a_at(k + 1) * u[k + 1]) / coeffs.a_at(k)
    return u


def propagate(coeffs, z, init, lo, hi):
    """States at indices ``lo..hi`` of the solution through ``init``.

    Runs the scalar recurrence directly; it is a separate code path from
    :func:`transfer`, which makes the two useful as cross-checks.
    """
    if lo > hi:
        raise ValueError("empty index range")
    u = _solution_values(coeffs, z, init, lo, hi)
    return [State2(u[k + 1], coeffs.a_at(k + 1) * u[k], k) for k in range(lo, hi + 1)]


def recurrence_residual(coeffs, z, states):
    """Largest relative residual of the three-term recurrence along ``states``."""
    worst = 0.0
    for prev, cur in zip(states, states[1:]):
        n = cur.index
        # u(n-1) = prev.bottom / a(n); u(n) = cur.bottom / a(n+1) = prev.top
        u_nm1 = prev.bottom / coeffs.a_at(n)
        u_n = prev.top
        u_np1 = cur.top
        terms = (coeffs.a_at(n + 1) * u_np1, coeffs.b_at(n) * u_n, coeffs.a_at(n) * u_nm1, z * u_n)
        scale = max(abs(t) for t in terms) or 1.0
        res = abs(terms[0] + terms[1] + terms[2] - terms[3])
        worst = max(worst, res / scale)
    return worst


def _check_periodic(coeffs, p, lo, hi, rtol=1e-12):
    lo, hi = max(lo, coeffs.n_lo), min(hi, coeffs.n_hi)
    for arr in (coeffs.a, coeffs.b):
        seg = arr[lo - coeffs.n_lo : hi - coeffs.n_lo + 1]
        if seg.size > p:
            d = np.abs(seg[p:] - seg[:-p])
            if np.any(d > rtol * (1 + np.abs(seg[p:]))):
                raise ValueError(f"coefficients are not {p}-periodic on [{lo}, {hi}]")


def three_block_gap(coeffs_periodic, z, p, init):
    """max{|state(-p)|, |state(p)|, |state(2p)|} / |state(0)| for periodic coefficients."""
    if p < 1:
        raise ValueError("period must be positive")
    if init.index != 0:
        raise ValueError("initial state must sit at index 0")
    norm0 = init.norm()
    if norm0 == 0:
        raise ValueError("initial state is zero")
    coeffs_periodic.require(-p + 1, 2 * p + 1)
    _check_periodic(coeffs_periodic, p, -p + 1, 2 * p + 1)
    T = transfer(coeffs_periodic, z, p, 0)
    v = init.vector
    vp = T @ v
    v2p = T @ vp
    vmp = transfer(coeffs_periodic, z, -p, 0) @ v
    return max(np.linalg.norm(w) for w in (vmp, vp, v2p)) / norm0


def _A_matrix(c, z, k):
    a1 = c.a_at(k + 1)
    return mat2((z - c.b_at(k)) / a1, -1.0 / a1, a1, 0.0)


def _B_matrix(c, ct, z, k):
    a1, at1 = c.a_at(k + 1), ct.a_at(k + 1)
    return mat2(
        (z - c.b_at(k)) / a1 - (z - ct.b_at(k)) / at1,
        -1.0 / a1 + 1.0 / at1,
        a1 - at1,
        0.0,
    )


def perturbation_bound(coeffs, coeffs_tilde, z, init, n):
    """(lhs, rhs) of the product-sum bound on the state difference at ``n``.

    ``init`` is the common state ``(u(1), a(1)u(0)) = (ũ(1), ã(1)ũ(0))``.
    """
    if init.index != 0:
        raise ValueError("the common initial state must sit at index 0")
    lo, hi = min(n, 0), max(n, 0)
    s = propagate(coeffs, z, init, lo, hi)
    st = propagate(coeffs_tilde, z, init, lo, hi)
    get = {x.index: x for x in s}
    get_t = {x.index: x for x in st}
    lhs = float(np.linalg.norm(get[n].vector - get_t[n].vector))
    ks = range(min(n + 1, 1), max(0, n) + 1)
    prod = 1.0
    total = 0.0
    for k in ks:
        prod *= mat2_norm2(_A_matrix(coeffs, z, k))
        # n > 0 pairs B(k) with the tilde state at k-1, n < 0 with the one at k
        tilde_state = get_t[k - 1] if n > 0 else get_t[k]
        total += mat2_norm2(_B_matrix(coeffs, coeffs_tilde, z, k)) * tilde_state.norm()
    return lhs, prod * total


def disk_radius_jacobi(norm_a, norm_ainv, norm_b, C):
    """Radius r with ‖1/a‖(r + ‖b‖) + ‖1/a‖ + ‖a‖ <= e^{C/2}, clamped at 0."""
    if norm_a <= 0 or norm_ainv <= 0 or C <= 0 or norm_b < 0:
        raise ValueError("norms and C must be positive")
    if norm_a * norm_ainv < 1 - 1e-12:
        raise ValueError("norm_a * norm_ainv must be at least 1")
    r = (math.exp(C / 2) - norm_ainv - norm_a) / norm_ainv - norm_b
    return max(0.0, r)


def gordon_defect(coeffs, p):
    """max over k = -p+1..p of |a(k+1) - a(k+1+p)| + |b(k) - b(k+p)|."""
    if p < 1:
        raise ValueError("period must be positive")
    coeffs.require(-p + 1, 2 * p + 1)
    a_lo = coeffs.a_slice(-p + 2, p + 1)
    a_hi = coeffs.a_slice(2, 2 * p + 1)
    b_lo = coeffs.b_slice(-p + 1, p)
    b_hi = coeffs.b_slice(1, 2 * p)
    return float(np.max(np.abs(a_lo - a_hi) + np.abs(b_lo - b_hi)))


def rates_from_defects(defects, periods):
    return [math.inf if d == 0 else -math.log(d) / p for d, p in zip(defects, periods)]


def gordon_rate(coeffs, periods):
    """Per-period rate -ln(d_p)/p; +inf where the defect vanishes."""
    return rates_from_defects([gordon_defect(coeffs, p) for p in periods], periods)


def tail_minima(rates):
    """Running minimum of the tail: entry m is min(rates[m:])."""
    out, cur = [], math.inf
    for r in reversed(rates):
        cur = min(cur, r)
        out.append(cur)
    return out[::-1]


@dataclass(frozen=True)
class ScanRow:
    z: complex
    period: int
    defect: float
    error_bound: float
    periodic_checkpoint: float
    true_checkpoint: float
    max_deviation: float
    certified: bool

    @property
    def consistent(self):
        return (not self.certified) or self.true_checkpoint >= 0.25


def _log_error_bound(coeffs, z, p, log_d):
    if log_d == -math.inf:
        return -math.inf
    r = abs(z) + coeffs.norm_b
    G = coeffs.norm_ainv * r + coeffs.norm_ainv + coeffs.norm_a
    K = coeffs.norm_ainv**2 * (r + 1) + 1
    return 2 * p * math.log(G) + math.log(K) + math.log(2 * p) + log_d


def _march(coeffs, zs, top, bottom, n_from, n_to):
    """Advance states for every z in ``zs`` from index n_from to n_to.

    Yields ``(index, top, bottom)`` after each step, including the start.
    """
    top = np.array(top, dtype=np.complex128)
    bottom = np.array(bottom, dtype=np.complex128)
    yield n_from, top, bottom
    off = coeffs.n_lo
    if n_to > n_from:
        coeffs.require(n_from + 1, n_to + 1)
        for n in range(n_from, n_to):
            a2 = coeffs.a[n + 2 - off]
            b1 = coeffs.b[n + 1 - off]
            top, bottom = ((zs - b1) * top - bottom) / a2, a2 * top
            yield n + 1, top, bottom
    else:
        coeffs.require(n_to + 1, n_from + 1)
        for n in range(n_from, n_to, -1):
            a1 = coeffs.a[n + 1 - off]
            b0 = coeffs.b[n - off]
            top, bottom = bottom / a1, -a1 * top + (zs - b0) * bottom / a1
            yield n - 1, top, bottom


def growth_scan(coeffs, z, periods, init=(1.0, 0.0), log_defect_bounds=None):
    """Per-period bookkeeping of the eigenvalue-exclusion argument at ``z``.

    ``z`` may be a scalar or a 1-d array; rows come back ordered by
    (z.real, z.imag, period).  The error bound does not depend on the
    initial state; ``init`` (normalized to unit length) only feeds the
    reported checkpoint norms.

    Samples of a generator can agree to the last bit while the underlying
    sequence does not.  ``log_defect_bounds`` (one natural log per period)
    supplies rigorous upper bounds on the true defect; the bound then uses
    the larger of that and the measured defect.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    v0 = np.asarray(init, dtype=np.complex128)
    nv = np.linalg.norm(v0)
    if nv == 0:
        raise ValueError("initial state is zero")
    v0 = v0 / nv
    periods = list(periods)
    if any(q <= p for p, q in zip(periods, periods[1:])) or periods[0] < 1:
        raise ValueError("periods must be positive and increasing")
    if log_defect_bounds is not None and len(log_defect_bounds) != len(periods):
        raise ValueError("need one defect bound per period")
    rows = []
    for i, p in enumerate(periods):
        coeffs.require(-p, 2 * p + 1)
        per = coeffs.periodized(p, -p, 2 * p + 1)
        dmax = float(
            np.max(
                np.abs(coeffs.a_slice(-p + 2, 2 * p + 1) - per.a_slice(-p + 2, 2 * p + 1))
                + np.abs(coeffs.b_slice(-p + 1, 2 * p) - per.b_slice(-p + 1, 2 * p))
            )
        )
        log_d = math.log(dmax) if dmax > 0 else -math.inf
        if log_defect_bounds is not None:
            log_d = max(log_d, float(log_defect_bounds[i]))
            dmax = max(dmax, math.exp(log_d))
        checkpoints = {-p, p, 2 * p}
        true_ck = np.zeros(zs.size)
        per_ck = np.zeros(zs.size)
        dev = np.zeros(zs.size)
        for n_to in (2 * p, -p):
            w = np.broadcast_to(v0[:, None], (2, zs.size))
            march_true = _march(coeffs, zs, w[0], w[1], 0, n_to)
            march_per = _march(per, zs, w[0], w[1], 0, n_to)
            for (n, t1, b1), (_, t2, b2) in zip(march_true, march_per):
                d = np.sqrt(np.abs(t1 - t2) ** 2 + np.abs(b1 - b2) ** 2)
                dev = np.maximum(dev, d)
                if n in checkpoints:
                    true_ck = np.maximum(true_ck, np.sqrt(np.abs(t1) ** 2 + np.abs(b1) ** 2))
                    per_ck = np.maximum(per_ck, np.sqrt(np.abs(t2) ** 2 + np.abs(b2) ** 2))
        for j, zj in enumerate(zs):
            log_err = _log_error_bound(coeffs, zj, p, log_d)
            err = math.exp(log_err) if log_err < 700 else math.inf
            rows.append(
                ScanRow(
                    complex(zj), p, dmax, err, float(per_ck[j]), float(true_ck[j]),
                    float(dev[j]), err < 0.25,
                )
            )
    rows.sort(key=lambda r: (r.z.real, r.z.imag, r.period))
    return rows
