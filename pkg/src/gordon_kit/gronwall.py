"""Discrete and measure-driven Gronwall bounds."""

import math
from dataclasses import dataclass, field

import numpy as np

from .measures import PiecewiseConstant


@dataclass(frozen=True)
class DiscreteGronwallInput:
    """Data for ``x_{n+1} <= alphas[n] * x_n + betas[n]`` with ``x_0 = 0``."""

    alphas: tuple
    betas: tuple
    xs: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "xs", tuple(float(x) for x in self.xs))
        if len(self.alphas) != len(self.betas):
            raise ValueError("alphas and betas must have equal length")
        if any(not a >= 1 for a in self.alphas):
            raise ValueError("alphas must be >= 1")
        if any(not b >= 0 for b in self.betas):
            raise ValueError("betas must be >= 0")
        if self.xs:
            if self.xs[0] != 0:
                raise ValueError("x_0 must be 0")
            if any(x < 0 for x in self.xs):
                raise ValueError("xs must be >= 0")
            if len(self.xs) > len(self.alphas) + 1:
                raise ValueError("more xs than recurrence steps")
            for n in range(len(self.xs) - 1):
                rhs = self.alphas[n] * self.xs[n] + self.betas[n]
                if self.xs[n + 1] > rhs * (1 + 1e-12):
                    raise ValueError(f"recurrence violated at n={n}")


def gronwall_discrete_bound(data, n):
    """prod_{k<n} alpha_k * sum_{k<n} beta_k."""
    if not 0 <= n <= len(data.alphas):
        raise IndexError(f"n={n} outside 0..{len(data.alphas)}")
    return math.prod(data.alphas[:n]) * math.fsum(data.betas[:n])


def _constant_alpha(alpha):
    if isinstance(alpha, PiecewiseConstant):
        return alpha
    return PiecewiseConstant([], [], fill=float(alpha))


def gronwall_continuous_bound(alpha, mu, t):
    """alpha(t) + integral over [0, t) of alpha(s) exp(mu((s, t))) dmu(s).

    ``alpha`` is a nonnegative piecewise-constant function (or a number)
    and ``mu`` a nonnegative local measure.  The evaluation is exact: atoms
    contribute point terms and each constant piece of density integrates
    in closed form.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not mu.is_nonnegative():
        raise ValueError("mu must be a nonnegative measure")
    alpha = _constant_alpha(alpha)
    fill = complex(alpha.fill) if alpha.fill is not None else 0j
    if np.any(alpha.values.imag != 0) or np.any(alpha.values.real < 0) or fill.imag != 0 or fill.real < 0:
        raise ValueError("alpha must be real and nonnegative")
    total = alpha(t).real
    if t == 0:
        return total
    # every point where alpha, the density, or the atom set can change
    cuts = np.union1d(alpha.breaks, mu.breakpoints())
    cuts = cuts[(cuts > 0) & (cuts < t)]
    pts = np.concatenate(([0.0], cuts, [float(t)]))
    terms = []
    for x, w in mu.atoms_in(0.0, t, left_closed=True, right_closed=False):
        terms.append(alpha(x).real * w.real * math.exp(mu.mass(x, t, False, False).real))
    for l, r in zip(pts[:-1], pts[1:]):
        m = 0.5 * (l + r)
        rho = mu.density(m).real
        if rho == 0:
            continue
        tail = mu.mass(r, t, True, False).real if r < t else 0.0
        terms.append(alpha(m).real * math.exp(tail) * math.expm1(rho * (r - l)))
    return total + math.fsum(terms)
