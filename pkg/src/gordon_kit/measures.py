"""Local measures made of atoms plus a piecewise-constant density.

The model is closed under translation, restriction, sums and periodic
tiling, and every quantity the estimates need (primitive, local total
variation, the phi-median norm) is computed exactly on it.
"""

import math

import numpy as np
from scipy.optimize import minimize

from .errors import WindowError


class PiecewiseConstant:
    """A function constant on each ``[breaks[i], breaks[i+1])``.

    Outside ``[breaks[0], breaks[-1])`` it equals ``fill``; with
    ``fill=None`` the last value also holds at ``breaks[-1]`` and
    evaluating beyond raises :class:`WindowError`.
    """

    def __init__(self, breaks, values, fill=None):
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=np.complex128)
        if breaks.ndim != 1 or values.ndim != 1:
            raise ValueError("breaks and values must be 1-d")
        if values.size and breaks.size != values.size + 1:
            raise ValueError("need len(breaks) == len(values) + 1")
        if values.size == 0 and breaks.size not in (0, 1):
            raise ValueError("breaks given without values")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breaks must be strictly increasing")
        if not (np.all(np.isfinite(breaks)) and np.all(np.isfinite(values))):
            raise ValueError("breaks and values must be finite")
        self.breaks = breaks if values.size else np.zeros(0)
        self.values = values
        self.fill = fill

    def __repr__(self):
        return f"PiecewiseConstant(breaks={self.breaks.tolist()}, values={self.values.tolist()}, fill={self.fill})"

    @classmethod
    def constant(cls, value, lo, hi, fill=None):
        return cls([lo, hi], [value], fill)

    @property
    def span(self):
        if self.values.size == 0:
            return (math.inf, -math.inf)
        return (float(self.breaks[0]), float(self.breaks[-1]))

    def covers(self, lo, hi):
        if self.fill is not None:
            return True
        s0, s1 = self.span
        return s0 <= lo and hi <= s1

    def require(self, lo, hi):
        if not self.covers(lo, hi):
            raise WindowError(f"[{lo}, {hi}] not inside [{self.span[0]}, {self.span[1]}]")

    def __call__(self, t):
        t = float(t)
        if self.values.size and self.breaks[0] <= t < self.breaks[-1]:
            i = int(np.searchsorted(self.breaks, t, side="right")) - 1
            return complex(self.values[i])
        if self.values.size and t == self.breaks[-1] and self.fill is None:
            return complex(self.values[-1])
        if self.fill is None:
            raise WindowError(f"t={t} outside [{self.span[0]}, {self.span[1]}]")
        return complex(self.fill)

    def pieces(self, lo, hi):
        """``(x0, x1, value)`` triples tiling ``[lo, hi]`` with constant value."""
        if hi < lo:
            raise ValueError("empty interval")
        self.require(lo, hi)
        if hi == lo:
            return []
        inner = self.breaks[(self.breaks > lo) & (self.breaks < hi)]
        pts = np.concatenate(([lo], inner, [hi]))
        return [(float(x0), float(x1), self(0.5 * (x0 + x1))) for x0, x1 in zip(pts[:-1], pts[1:])]

    def integral(self, lo, hi):
        return sum((x1 - x0) * v for x0, x1, v in self.pieces(lo, hi))

    def abs_integral(self, lo, hi):
        return sum((x1 - x0) * abs(v) for x0, x1, v in self.pieces(lo, hi))

    def sup_abs(self):
        vals = np.abs(self.values)
        if self.fill is not None:
            vals = np.append(vals, abs(self.fill))
        return float(vals.max()) if vals.size else 0.0

    def inf_abs(self):
        vals = np.abs(self.values)
        if self.fill is not None:
            vals = np.append(vals, abs(self.fill))
        return float(vals.min()) if vals.size else math.inf

    def translated(self, d):
        return PiecewiseConstant(self.breaks + d, self.values, self.fill)

    def map_values(self, fn, fill=None):
        return PiecewiseConstant(self.breaks, fn(self.values), fill)

    def combine(self, other, op, fill=None):
        """Pointwise ``op(self, other)`` on the common refinement."""
        pts = np.union1d(self.breaks, other.breaks)
        if pts.size < 2:
            return PiecewiseConstant([], [], fill)
        mids = 0.5 * (pts[:-1] + pts[1:])
        vals = [op(self._at_or_fill(m), other._at_or_fill(m)) for m in mids]
        return PiecewiseConstant(pts, vals, fill)

    def _at_or_fill(self, t):
        try:
            return self(t)
        except WindowError:
            return 0.0

    def simplified(self):
        """Merge neighbouring pieces carrying the same value."""
        if self.values.size < 2:
            return self
        keep = np.concatenate(([True], self.values[1:] != self.values[:-1]))
        br = np.append(self.breaks[:-1][keep], self.breaks[-1])
        return PiecewiseConstant(br, self.values[keep], self.fill)


class LocalMeasure:
    """Atoms plus a piecewise-constant density (zero outside its pieces).

    ``window`` records where the measure is known; queries outside it
    raise :class:`WindowError`.
    """

    def __init__(self, atoms=(), breaks=(), values=(), window=(-math.inf, math.inf)):
        atoms = sorted(((float(x), complex(w)) for x, w in atoms), key=lambda a: a[0])
        pos = np.array([x for x, _ in atoms], dtype=float)
        if np.any(np.diff(pos) <= 0):
            raise ValueError("atom positions must be distinct")
        self.atom_pos = pos
        self.atom_w = np.array([w for _, w in atoms], dtype=np.complex128)
        if isinstance(breaks, PiecewiseConstant):
            self.density = PiecewiseConstant(breaks.breaks, breaks.values, 0.0)
        else:
            self.density = PiecewiseConstant(breaks, values, 0.0)
        self.window = (float(window[0]), float(window[1]))

    def __repr__(self):
        atoms = list(zip(self.atom_pos.tolist(), self.atom_w.tolist()))
        return (f"LocalMeasure(atoms={atoms}, breaks={self.density.breaks.tolist()}, "
                f"values={self.density.values.tolist()}, window={self.window})")

    @classmethod
    def lebesgue(cls, lo, hi, rho=1.0):
        return cls(breaks=[lo, hi], values=[rho], window=(lo, hi))

    @property
    def atoms(self):
        return list(zip(self.atom_pos.tolist(), self.atom_w.tolist()))

    @property
    def is_real(self):
        return bool(np.all(self.atom_w.imag == 0) and np.all(self.density.values.imag == 0))

    @property
    def is_zero(self):
        return bool(np.all(self.atom_w == 0) and np.all(self.density.values == 0))

    def is_nonnegative(self):
        return self.is_real and bool(np.all(self.atom_w.real >= 0) and np.all(self.density.values.real >= 0))

    def require(self, lo, hi):
        if lo < self.window[0] or hi > self.window[1]:
            raise WindowError(f"[{lo}, {hi}] not inside measure window {self.window}")

    def _atom_mask(self, lo, hi, left_closed, right_closed):
        p = self.atom_pos
        m = (p > lo) | ((p == lo) & left_closed)
        return m & ((p < hi) | ((p == hi) & right_closed))

    def mass(self, lo, hi, left_closed=False, right_closed=True):
        """mu of the interval between lo and hi (default ``(lo, hi]``)."""
        if hi < lo:
            raise ValueError("hi < lo")
        self.require(lo, hi)
        atoms = self.atom_w[self._atom_mask(lo, hi, left_closed, right_closed)].sum()
        return complex(atoms + self.density.integral(lo, hi))

    def variation(self, lo, hi, left_closed=False, right_closed=True):
        """|mu| of the interval between lo and hi (default ``(lo, hi]``)."""
        if hi < lo:
            raise ValueError("hi < lo")
        self.require(lo, hi)
        atoms = np.abs(self.atom_w[self._atom_mask(lo, hi, left_closed, right_closed)]).sum()
        return float(atoms + self.density.abs_integral(lo, hi))

    def atoms_in(self, lo, hi, left_closed=False, right_closed=True):
        m = self._atom_mask(lo, hi, left_closed, right_closed)
        return list(zip(self.atom_pos[m].tolist(), self.atom_w[m].tolist()))

    def breakpoints(self):
        return np.union1d(self.atom_pos, self.density.breaks)

    # constructions -------------------------------------------------------

    def translated(self, d):
        """The measure B -> mu(B - d), i.e. everything moved right by d."""
        return LocalMeasure(
            zip(self.atom_pos + d, self.atom_w),
            self.density.breaks + d,
            self.density.values,
            (self.window[0] + d, self.window[1] + d),
        )

    def shifted_by(self, p):
        """mu(. + p) as a measure: atoms move from x to x - p."""
        return self.translated(-p)

    def scaled(self, c):
        return LocalMeasure(zip(self.atom_pos, c * self.atom_w), self.density.breaks,
                            c * self.density.values, self.window)

    def _binary(self, other, sign):
        w = (max(self.window[0], other.window[0]), min(self.window[1], other.window[1]))
        atoms = {}
        for x, v in self.atoms:
            atoms[x] = atoms.get(x, 0) + v
        for x, v in other.atoms:
            atoms[x] = atoms.get(x, 0) + sign * v
        dens = self.density.combine(other.density, lambda u, v: u + sign * v, fill=0.0)
        return LocalMeasure(((x, v) for x, v in atoms.items() if v != 0), dens, window=w)

    def __add__(self, other):
        return self._binary(other, 1)

    def __sub__(self, other):
        return self._binary(other, -1)

    def with_density_shift(self, c, lo=None, hi=None):
        """Add the constant density ``c`` on ``[lo, hi]`` (default: the window)."""
        lo = self.window[0] if lo is None else lo
        hi = self.window[1] if hi is None else hi
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("a density shift needs a finite interval")
        return self + LocalMeasure(breaks=[lo, hi], values=[c], window=self.window)

    def restricted(self, lo, hi):
        """Restriction to ``(lo, hi]`` (density restricted to [lo, hi])."""
        atoms = self.atoms_in(lo, hi)
        pieces = [(x0, x1, v) for x0, x1, v in self.density.pieces(lo, hi)]
        if pieces:
            br = [pieces[0][0]] + [x1 for _, x1, _ in pieces]
            vals = [v for _, _, v in pieces]
        else:
            br, vals = [], []
        return LocalMeasure(atoms, br, vals, self.window)

    def tiled(self, p, lo, hi):
        """p-periodic extension of the restriction to ``(0, p]``, over ``[lo, hi]``."""
        base = self.restricted(0.0, p)
        k0 = math.floor(lo / p) - 1
        k1 = math.ceil(hi / p) + 1
        atoms = []
        br, vals = [], []
        base_pieces = base.density.simplified()
        for k in range(k0, k1 + 1):
            for x, w in base.atoms:
                y = x + k * p
                if lo <= y <= hi:
                    atoms.append((y, w))
            for x0, x1, v in zip(base_pieces.breaks[:-1], base_pieces.breaks[1:], base_pieces.values):
                y0, y1 = max(x0 + k * p, lo), min(x1 + k * p, hi)
                if y1 > y0:
                    br.append((y0, y1))
                    vals.append(v)
        # stitch contiguous pieces into one breakpoint list
        breaks, values = [], []
        for (y0, y1), v in sorted(zip(br, vals), key=lambda t: t[0][0]):
            if breaks and abs(breaks[-1] - y0) < 1e-12:
                breaks[-1] = y0
            elif breaks:
                breaks.append(y0)
                values.append(0.0)
            else:
                breaks.append(y0)
            breaks.append(y1)
            values.append(v)
        dens = PiecewiseConstant(breaks, values, 0.0).simplified() if values else PiecewiseConstant([], [], 0.0)
        return LocalMeasure(atoms, dens, window=(lo, hi))

    # primitive -----------------------------------------------------------

    def phi(self, t):
        return phi(self, t)

    def phi_segments(self, lo, hi):
        """Linear pieces ``(t0, t1, v0, v1)`` of phi on ``[lo, hi]``.

        phi jumps at atoms; each piece holds the right-continuous values.
        """
        self.require(lo, hi)
        cuts = self.breakpoints()
        cuts = cuts[(cuts > lo) & (cuts < hi)]
        pts = np.concatenate(([lo], cuts, [hi]))
        segs = []
        v = phi(self, lo)
        for t0, t1 in zip(pts[:-1], pts[1:]):
            rho = self.density(0.5 * (t0 + t1))
            v1 = v + rho * (t1 - t0)
            segs.append((float(t0), float(t1), v, v1))
            # jump by the atom sitting at t1 (if any) before the next piece
            j = np.searchsorted(self.atom_pos, t1)
            if j < self.atom_pos.size and self.atom_pos[j] == t1 and t1 < hi:
                v1 = v1 + self.atom_w[j]
            v = v1
        return segs


def phi(mu, t):
    """mu((0, t]) for t >= 0 and -mu((t, 0]) for t < 0."""
    if t >= 0:
        return mu.mass(0.0, t)
    return -mu.mass(t, 0.0)


def _cum_abs_density(mu):
    """Knots and values of t -> integral of |rho| over (-inf, t]."""
    br = mu.density.breaks
    if br.size == 0:
        return np.array([0.0, 1.0]), np.array([0.0, 0.0])
    cum = np.concatenate(([0.0], np.cumsum(np.abs(mu.density.values) * np.diff(br))))
    return br, cum


def unif_norm(mu):
    """sup over x of |mu|((x, x+1]), evaluated at every critical window position."""
    pos = mu.atom_pos
    br = mu.density.breaks
    crit = np.unique(np.concatenate((pos, pos - 1.0, br, br - 1.0)))
    if crit.size == 0:
        return 0.0
    knots, cum = _cum_abs_density(mu)
    wabs = np.abs(mu.atom_w)
    cw = np.concatenate(([0.0], np.cumsum(wabs)))

    def dens(x):
        return np.interp(x + 1.0, knots, cum) - np.interp(x, knots, cum)

    def atoms(x):
        # atoms with x < pos <= x + 1
        hi = np.searchsorted(pos, x + 1.0, side="right")
        lo = np.searchsorted(pos, x, side="right")
        return cw[hi] - cw[lo]

    at_crit = atoms(crit) + dens(crit)
    best = float(at_crit.max())
    if crit.size > 1:
        mids = 0.5 * (crit[:-1] + crit[1:])
        open_sup = atoms(mids) + np.maximum(dens(crit[:-1]), dens(crit[1:]))
        best = max(best, float(open_sup.max()))
    return best


# phi-median norm --------------------------------------------------------


def _seg_abs_integral_real(L, v0, v1, c):
    lo, hi = min(v0, v1), max(v0, v1)
    if c <= lo:
        return L * (0.5 * (v0 + v1) - c)
    if c >= hi:
        return L * (c - 0.5 * (v0 + v1))
    return L * ((hi - c) ** 2 + (c - lo) ** 2) / (2.0 * (hi - lo))


def _F(x, h):
    r = math.hypot(x, h)
    if h == 0:
        return 0.5 * x * abs(x)
    return 0.5 * (x * r + h * h * math.asinh(x / h))


def _seg_abs_integral_complex(L, v0, v1, c):
    w0 = v0 - c
    d = (v1 - v0) / L
    ad = abs(d)
    if ad == 0:
        return L * abs(w0)
    q = w0 * d.conjugate()
    s0 = -q.real / (ad * ad)
    h = abs(q.imag) / (ad * ad)
    return ad * (_F(L - s0, h) - _F(-s0, h))


def _objective(segs, c, real):
    if real:
        c = c.real
        return sum(_seg_abs_integral_real(t1 - t0, v0.real, v1.real, c) for t0, t1, v0, v1 in segs if t1 > t0)
    return sum(_seg_abs_integral_complex(t1 - t0, v0, v1, c) for t0, t1, v0, v1 in segs if t1 > t0)


def _weighted_median(parts):
    """Median of the push-forward of Lebesgue measure under a piecewise-linear map.

    ``parts`` are ``(length, v0, v1)`` with real values.
    """
    total = sum(L for L, _, _ in parts)
    half = 0.5 * total
    knots = sorted({v for _, v0, v1 in parts for v in (v0, v1)})

    def cdf(c, strict):
        s = 0.0
        for L, v0, v1 in parts:
            lo, hi = min(v0, v1), max(v0, v1)
            if hi == lo:
                s += L if (c > lo or (c == lo and not strict)) else 0.0
            else:
                s += L * min(max((c - lo) / (hi - lo), 0.0), 1.0)
        return s

    prev = None
    for k in knots:
        if cdf(k, strict=False) >= half:
            left = cdf(k, strict=True)
            if left >= half and prev is not None:
                f0 = cdf(prev, strict=False)
                if left > f0:
                    return prev + (k - prev) * (half - f0) / (left - f0)
                return prev
            return k
        prev = k
    return knots[-1]


def wasser_norm(mu, x):
    """(J, c) with J = min over c of the integral of |phi - c| over [x-1, x+1].

    The test-function norm of mu on [x-1, x+1] lies in [J/2, J].
    """
    segs = [s for s in mu.phi_segments(x - 1.0, x + 1.0) if s[1] > s[0]]
    if not segs:
        return 0.0, 0j
    if mu.is_real:
        c = _weighted_median([(t1 - t0, v0.real, v1.real) for t0, t1, v0, v1 in segs])
        return float(_objective(segs, complex(c), True)), complex(c)
    cr = _weighted_median([(t1 - t0, v0.real, v1.real) for t0, t1, v0, v1 in segs])
    ci = _weighted_median([(t1 - t0, v0.imag, v1.imag) for t0, t1, v0, v1 in segs])
    starts = [complex(cr, ci)] + [v0 for t0, t1, v0, v1 in segs if v0 == v1]
    start = min(starts, key=lambda c: _objective(segs, c, False))
    scale = max(abs(v) for s in segs for v in (s[2], s[3])) or 1.0

    def f(xy):
        return _objective(segs, complex(xy[0], xy[1]), False)

    best = np.array([start.real, start.imag])
    fbest = f(best)
    for step in (0.1 * scale, 1e-3 * scale, 1e-6 * scale):
        res = minimize(f, best, method="Nelder-Mead",
                       options={"xatol": 1e-13 * scale, "fatol": 1e-15 * scale,
                                "initial_simplex": [best, best + [step, 0], best + [0, step]],
                                "maxiter": 4000})
        if res.fun <= fbest:
            best, fbest = res.x, res.fun
    return float(fbest), complex(best[0], best[1])


def _max_dev(segs, c):
    return max((abs(v - c) for s in segs for v in (s[2], s[3])), default=0.0)


def window_norm_bound(mu, lo, hi, step=0.125):
    """Rigorous upper bound on the test-function norm of mu over [lo, hi].

    Every admissible test function lives in some [x-1, x+1] inside [lo, hi],
    so the norm is at most sup_x J(x).  J is evaluated on a grid and the
    gap between grid points is covered by a Lipschitz-in-x slack term.
    """
    if hi - lo < 2:
        raise ValueError("interval must have length at least 2")
    a, b = lo + 1.0, hi - 1.0
    n = max(1, math.ceil((b - a) / step))
    xs = np.linspace(a, b, n + 1)
    h = 0.5 * (b - a) / n
    best = 0.0
    for x in xs:
        J, c = wasser_norm(mu, float(x))
        if h > 0:
            e0, e1 = max(lo, x - 1 - h), min(hi, x + 1 + h)
            strips = mu.phi_segments(e0, x - 1) if x - 1 > e0 else []
            strips += mu.phi_segments(x + 1, e1) if e1 > x + 1 else []
            J += h * _max_dev(strips, c)
        best = max(best, J)
    return best
