"""Quasiperiodic Jacobi coefficients over a Liouville rotation.

The frequency is carried as an exact continued fraction.  Torus points
``alpha * n mod 1`` come from the shallowest convergent whose substitution
error over the window is provably negligible, and defects at convergent
denominators are computed from the exact offset ``alpha q_m - p_m`` so
they stay meaningful far below double precision.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from .errors import PrecisionBudgetError
from .jacobi import CoeffSeq, GordonCertificate, disk_radius_jacobi, gordon_defect

MAX_DEPTH = 8
DEFAULT_BIT_BUDGET = 1 << 20
SUBSTITUTION_TOL = 10**18  # window size times convergent error must stay below 1e-18


@dataclass(frozen=True)
class Frequency:
    """alpha = [0; a_1, a_2, ...] known through ``partial_quotients``.

    ``exact=True`` means alpha *is* the last convergent (rational alpha).
    Otherwise the tail is unknown apart from every further quotient being
    at least 1.
    """

    partial_quotients: tuple
    exact: bool = False
    ps: tuple = field(init=False, repr=False)
    qs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        quots = tuple(int(a) for a in self.partial_quotients)
        if not quots or any(a < 1 for a in quots):
            raise ValueError("need at least one partial quotient, all >= 1")
        ps, qs = [0], [1]
        p_prev, q_prev = 1, 0
        for a in quots:
            p_new, q_new = a * ps[-1] + p_prev, a * qs[-1] + q_prev
            p_prev, q_prev = ps[-1], qs[-1]
            ps.append(p_new)
            qs.append(q_new)
        object.__setattr__(self, "partial_quotients", quots)
        object.__setattr__(self, "ps", tuple(ps))
        object.__setattr__(self, "qs", tuple(qs))

    @property
    def depth(self):
        return len(self.partial_quotients)

    @property
    def convergents(self):
        return list(zip(self.ps, self.qs))

    def convergent(self, m):
        return self.ps[m], self.qs[m]

    def approx_error_den(self, j):
        """D with |alpha - p_j/q_j| < 1/D (``None`` means the error is zero)."""
        d = self.depth
        if j < d:
            return self.qs[j] * self.qs[j + 1]
        if self.exact:
            return None
        return self.qs[d] * (self.qs[d] + self.qs[d - 1])

    def alpha_bracket(self):
        """Exact endpoints ``((num, den), (num, den))`` of an interval holding alpha."""
        d = self.depth
        lo = (self.ps[d], self.qs[d])
        if self.exact:
            return lo, lo
        return lo, (self.ps[d] + self.ps[d - 1], self.qs[d] + self.qs[d - 1])

    def delta(self, m):
        """alpha q_m - p_m evaluated at alpha ~ p_d/q_d, as ``(num, den)``."""
        d = self.depth
        return self.qs[m] * self.ps[d] - self.ps[m] * self.qs[d], self.qs[d]

    def delta_bound(self, m):
        """Rigorous upper bound on |alpha q_m - p_m| = dist(alpha q_m, Z), as ``(num, den)``."""
        best = (0, 1)
        for num, den in self.alpha_bracket():
            cand = (abs(self.qs[m] * num - self.ps[m] * den), den)
            if cand[0] * best[1] > best[0] * cand[1]:
                best = cand
        return best

    def satisfies_liouville_bound(self, m):
        """q_m q_{m+1} >= m^{q_m}, checked in exact integers."""
        if not 1 <= m < self.depth:
            raise IndexError(f"m={m} needs 1 <= m < depth")
        return self.qs[m] * self.qs[m + 1] >= m ** self.qs[m]

    @classmethod
    def golden(cls, depth=60):
        return cls((1,) * depth)

    @classmethod
    def rational(cls, p, q):
        """Exact continued fraction of p/q in (0, 1)."""
        if not 0 < p < q:
            raise ValueError("need 0 < p < q")
        quots = []
        while p:
            a, r = divmod(q, p)
            quots.append(a)
            q, p = p, r
        return cls(tuple(quots), exact=True)


def liouville_frequency(depth, first_quotient=2, bit_budget=DEFAULT_BIT_BUDGET):
    """Continued fraction with a_{m+1} = max(1, m^{q_m}), seeded with a_1.

    This gives |alpha - p_m/q_m| < 1/(q_m q_{m+1}) <= m^{-q_m}.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must lie in 1..{MAX_DEPTH}")
    if first_quotient < 1:
        raise ValueError("first_quotient must be >= 1")
    quots = [int(first_quotient)]
    q_prev, q = 1, int(first_quotient)
    for m in range(1, depth):
        bits = 0.0 if m == 1 else (math.inf if q.bit_length() > 60 else q * math.log2(m))
        if bits > bit_budget:
            raise PrecisionBudgetError(
                f"partial quotient a_{m + 1} = {m}^q_{m} with q_{m} of {q.bit_length()} bits "
                f"exceeds the {bit_budget}-bit budget"
            )
        a = max(1, m**q)
        quots.append(a)
        q_prev, q = q, a * q + q_prev
    return Frequency(tuple(quots))


def torus_points(freq, lo, hi):
    """alpha * n mod 1 for n = lo..hi, as floats."""
    if hi < lo:
        raise ValueError("empty window")
    N = max(abs(lo), abs(hi), 1)
    for j in range(freq.depth + 1):
        den = freq.approx_error_den(j)
        if freq.qs[j] >= 1 and (den is None or N * SUBSTITUTION_TOL < den):
            break
    else:
        raise PrecisionBudgetError(f"no convergent is deep enough for a window reaching |n| = {N}")
    p, q = freq.ps[j], freq.qs[j]
    n = np.arange(lo, hi + 1)
    if q * N < 2**62:
        r = (np.int64(p % q) * n.astype(np.int64)) % q
        return r.astype(float) / q
    step = p % q
    r = (step * lo) % q
    out = np.empty(n.size)
    for i in range(n.size):
        out[i] = r / q
        r += step
        if r >= q:
            r -= q
    return out


def _torus_dist(x, y):
    d = np.abs(np.asarray(x) - np.asarray(y)) % 1.0
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class TorusSampler:
    """A Hölder function on R/Z with the metadata the estimates consume."""

    name: str
    evaluator: Callable
    holder_beta: float
    holder_const: float
    sup: float
    inf_modulus: float = 0.0
    params: dict = field(default_factory=dict)
    trig_coeffs: dict = None

    def __post_init__(self):
        if not 0 < self.holder_beta <= 1:
            raise ValueError("holder_beta must lie in (0, 1]")
        if self.holder_const < 0 or self.sup < 0 or self.inf_modulus < 0:
            raise ValueError("holder_const, sup and inf_modulus must be nonnegative")

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float) % 1.0)

    def holder_violation(self, xs, ys):
        """Largest excess of |f(x)-f(y)| over c dist(x,y)^beta on the given pairs."""
        gap = np.abs(self(xs) - self(ys)) - self.holder_const * _torus_dist(xs, ys) ** self.holder_beta
        return float(np.max(gap)) if gap.size else 0.0


def _complex(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1] if len(v) > 1 else 0.0)
    return complex(v)


def trig_sampler(coeffs):
    """f(x) = sum_j c_j e^{2 pi i j x}; coeffs maps j to c_j (number or [re, im])."""
    cs = {int(j): _complex(c) for j, c in dict(coeffs).items()}
    if not cs:
        raise ValueError("trig sampler needs at least one coefficient")
    js = np.array(sorted(cs))
    cv = np.array([cs[j] for j in js])

    def f(x):
        return np.exp(2j * np.pi * np.multiply.outer(x, js)) @ cv

    c0 = abs(cs.get(0, 0))
    rest = sum(abs(c) for j, c in cs.items() if j != 0)
    return TorusSampler(
        name="trig",
        evaluator=f,
        holder_beta=1.0,
        holder_const=float(sum(abs(c) * 2 * np.pi * abs(j) for j, c in cs.items())),
        sup=float(c0 + rest),
        inf_modulus=float(max(0.0, c0 - rest)),
        params={"coeffs": {str(j): [c.real, c.imag] for j, c in cs.items()}},
        trig_coeffs=cs,
    )


def holder_sampler(beta, offset=0.0, amp=1.0):
    """f(x) = offset + amp * dist(x, Z)^beta."""
    offset, amp, beta = _complex(offset), _complex(amp), float(beta)
    peak = abs(amp) * 0.5**beta
    return TorusSampler(
        name="holder",
        evaluator=lambda x: offset + amp * np.minimum(x, 1.0 - x) ** beta,
        holder_beta=beta,
        holder_const=abs(amp),
        sup=abs(offset) + peak,
        inf_modulus=max(0.0, abs(offset) - peak),
        params={"beta": beta, "offset": [offset.real, offset.imag], "amp": [amp.real, amp.imag]},
    )


def constant_sampler(value):
    v = _complex(value)
    return TorusSampler(
        name="constant",
        evaluator=lambda x: np.full(np.shape(x), v, dtype=np.complex128),
        holder_beta=1.0,
        holder_const=0.0,
        sup=abs(v),
        inf_modulus=abs(v),
        params={"value": [v.real, v.imag]},
        trig_coeffs={0: v},
    )


SAMPLERS = {"trig": trig_sampler, "holder": holder_sampler, "constant": constant_sampler}


def make_sampler(name, **params):
    try:
        factory = SAMPLERS[name]
    except KeyError:
        raise ValueError(f"unknown sampler {name!r}; choose from {sorted(SAMPLERS)}") from None
    return factory(**params)


def sample_coeffs(a_sampler, b_sampler, freq, lo, hi):
    """a(n) = a~(alpha n), b(n) = b~(alpha n) on n = lo..hi."""
    if a_sampler.inf_modulus <= 0:
        raise ValueError("the a-sampler must be bounded away from zero")
    x = torus_points(freq, lo, hi)
    return CoeffSeq(
        lo, a_sampler(x), b_sampler(x),
        norm_a=a_sampler.sup, norm_ainv=1.0 / a_sampler.inf_modulus, norm_b=b_sampler.sup,
    )


def _mp_ratio(num, den):
    return mpmath.mpf(num) / mpmath.mpf(den)


def holder_defect_bound(a_sampler, b_sampler, freq, m):
    """(c_a + c_b) dist(alpha q_m, Z)^beta with beta the weaker exponent, as an mpf."""
    beta = min(a_sampler.holder_beta, b_sampler.holder_beta)
    num, den = freq.delta_bound(m)
    dist = _mp_ratio(num, den)
    if beta < 1 and dist > 1:
        raise ValueError("offset bound exceeds 1")
    return (a_sampler.holder_const + b_sampler.holder_const) * dist**beta


def _trig_increment_factor(sampler, x, delta):
    """g with f(x + delta) - f(x) = sin(pi |delta|) * g(x)."""
    s = mpmath.sin(mpmath.pi * abs(delta))
    g = np.zeros(np.shape(x), dtype=np.complex128)
    if s == 0:
        return g
    sign = 1 if delta > 0 else -1
    for j, c in sampler.trig_coeffs.items():
        if j == 0 or c == 0:
            continue
        ratio = float(mpmath.sin(mpmath.pi * j * abs(delta)) / s) * sign
        phase = complex(mpmath.expjpi(j * delta))
        g += c * 2j * ratio * phase * np.exp(2j * np.pi * j * x)
    return g


def quasi_defect(a_sampler, b_sampler, freq, m):
    """The Gordon defect at p = q_m as an mpf.

    Trigonometric samplers use the exact offset so tiny defects survive;
    other samplers fall back to the floating-point defect of the samples.
    """
    p = freq.qs[m]
    if a_sampler.trig_coeffs is not None and b_sampler.trig_coeffs is not None:
        num, den = freq.delta(m)
        delta = _mp_ratio(num, den)
        x = torus_points(freq, -p + 1, p + 1)
        ga = _trig_increment_factor(a_sampler, x[1:], delta)  # a at k+1
        gb = _trig_increment_factor(b_sampler, x[:-1], delta)  # b at k
        peak = float(np.max(np.abs(ga) + np.abs(gb)))
        return mpmath.sin(mpmath.pi * abs(delta)) * peak
    coeffs = sample_coeffs(a_sampler, b_sampler, freq, -p + 1, 2 * p + 1)
    return mpmath.mpf(gordon_defect(coeffs, p))


def _mp_log(x):
    return -math.inf if x == 0 else float(mpmath.log(x))


def example_certificate(a_sampler, b_sampler, freq, C, depths=None):
    """Gordon certificate at the convergent denominators q_m, m in ``depths``.

    Defects are stored as floats (they may underflow to 0) next to their
    natural logarithms, which do not.  ``weighted_defects`` holds
    ln(e^{C q_m} d_m) and ``decaying`` says whether those strictly decrease.
    """
    if depths is None:
        depths = range(1, freq.depth)
    periods, defects, logs, weighted = [], [], [], []
    for m in depths:
        p = freq.qs[m]
        if periods and p <= periods[-1]:
            continue
        d = quasi_defect(a_sampler, b_sampler, freq, m)
        periods.append(p)
        defects.append(float(d))
        logs.append(_mp_log(d))
        weighted.append(C * p + logs[-1])
    radius = disk_radius_jacobi(a_sampler.sup, 1.0 / a_sampler.inf_modulus, b_sampler.sup, C)
    decaying = len(weighted) > 1 and all(w1 < w0 for w0, w1 in zip(weighted, weighted[1:]))
    return GordonCertificate(
        periods=periods, defects=defects, rate_target=C, disk_radius=radius,
        weighted_defects=weighted, decaying=decaying, log_defects=logs,
    )
