"""Continuum half: Sturm-Liouville operators -(a u')' + u mu = z u.

Coefficients are a piecewise-constant ``a`` and a :class:`LocalMeasure`
``mu``.  The state at ``t`` is ``(u(t), (a u')(t+))``; crossing an atom of
weight g adds ``g u`` to the second entry.  ``z`` enters by replacing mu
with mu - z * Lebesgue.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import WindowError
from .mat2c import identity, mat2, mat2_inverse, mat2_norm2
from .measures import LocalMeasure, PiecewiseConstant, _objective, unif_norm, wasser_norm, window_norm_bound

SERIES_CUTOFF = 1e-6


class EnvelopeError(ValueError):
    """Supplied growth constants do not dominate the transfer matrices."""


@dataclass(frozen=True)
class CState:
    u: complex
    au_prime: complex
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.u) and np.isfinite(self.au_prime)):
            raise ValueError("state entries must be finite")

    @property
    def vector(self):
        return np.array([self.u, self.au_prime], dtype=np.complex128)

    def norm(self):
        return math.hypot(abs(self.u), abs(self.au_prime))


class SLCoeff:
    """Coefficient pair (a, mu) with norm metadata.

    ``norm_a`` and ``norm_ainv`` default to the extremes of ``a`` and may be
    supplied larger, never smaller.
    """

    def __init__(self, a, mu, norm_a=None, norm_ainv=None):
        if not isinstance(a, PiecewiseConstant):
            raise TypeError("a must be a PiecewiseConstant")
        if a.inf_abs() == 0:
            raise ValueError("a must be bounded away from zero")
        self.a = a
        self.mu = mu
        sup_a, sup_ainv = a.sup_abs(), 1.0 / a.inf_abs()
        self.norm_a = sup_a if norm_a is None else float(norm_a)
        self.norm_ainv = sup_ainv if norm_ainv is None else float(norm_ainv)
        if self.norm_a < sup_a * (1 - 1e-12) or self.norm_ainv < sup_ainv * (1 - 1e-12):
            raise ValueError("supplied norms are below the coefficient suprema")

    def __repr__(self):
        return f"SLCoeff(a={self.a!r}, mu={self.mu!r}, norm_a={self.norm_a}, norm_ainv={self.norm_ainv})"

    @classmethod
    def constant(cls, a_value, mu, lo, hi):
        return cls(PiecewiseConstant.constant(a_value, lo, hi), mu)

    @property
    def window(self):
        lo, hi = self.mu.window
        if self.a.fill is None:
            lo, hi = max(lo, self.a.span[0]), min(hi, self.a.span[1])
        return lo, hi

    def require(self, lo, hi):
        w = self.window
        if lo < w[0] or hi > w[1]:
            raise WindowError(f"[{lo}, {hi}] not inside coefficient window {w}")

    def mu_z(self, z, lo=None, hi=None):
        """mu - z * Lebesgue over [lo, hi] (default: the window)."""
        lo = self.window[0] if lo is None else lo
        hi = self.window[1] if hi is None else hi
        if z == 0:
            return self.mu
        return self.mu.with_density_shift(-z, lo, hi)


# propagation -------------------------------------------------------------


def _piece_matrix(A, w, dt):
    """exp(dt * [[0, 1/A], [w, 0]]) for constant a-value A and w = rho - z."""
    x = w / A * dt * dt
    if abs(x) < SERIES_CUTOFF:
        ch = 1 + x / 2 + x * x / 24
        S = dt * (1 + x / 6 + x * x / 120)
    else:
        k = np.sqrt(complex(w / A))
        ch = np.cosh(k * dt)
        S = np.sinh(k * dt) / k
    return mat2(ch, S / A, w * S, ch)


class _Propagator:
    """Precomputed piece data for sweeping states across [lo, hi]."""

    def __init__(self, coeff, z, lo, hi):
        coeff.require(lo, hi)
        self.lo, self.hi = float(lo), float(hi)
        a, mu = coeff.a, coeff.mu
        cuts = np.union1d(np.union1d(a.breaks, mu.density.breaks), mu.atom_pos)
        cuts = cuts[(cuts > lo) & (cuts < hi)]
        self.pts = np.concatenate(([lo], cuts, [hi]))
        mids = 0.5 * (self.pts[:-1] + self.pts[1:])
        if mids.size == 0:
            mids = np.array([lo])
        self.A = np.array([a(m) for m in mids])
        self.W = np.array([mu.density(m) - z for m in mids])
        self.atoms = dict(zip(mu.atom_pos.tolist(), mu.atom_w.tolist()))

    def _piece(self, x):
        i = int(np.searchsorted(self.pts, x, side="right")) - 1
        return min(max(i, 0), len(self.A) - 1)

    def matrix(self, t, s):
        """T(t, s) for lo <= s, t <= hi."""
        if not (self.lo <= s <= self.hi and self.lo <= t <= self.hi):
            raise WindowError(f"({t}, {s}) outside [{self.lo}, {self.hi}]")
        if t < s:
            return mat2_inverse(self.matrix(s, t))
        T = identity()
        x = s
        i = self._piece(s)
        while x < t:
            end = min(self.pts[i + 1], t) if i + 1 < len(self.pts) else t
            if end > x:
                T = _piece_matrix(self.A[i], self.W[i], end - x) @ T
            x = end
            g = self.atoms.get(x)
            if g is not None and x <= t:
                T = mat2(1.0, 0.0, g, 1.0) @ T
            i += 1
        return T

    def sweep(self, state, t0, targets):
        """States at sorted ``targets`` (all >= t0 or all <= t0)."""
        out = []
        v = np.asarray(state, dtype=np.complex128)
        x = t0
        for t in targets:
            v = self.matrix(t, x) @ v
            x = t
            out.append(v.copy())
        return out


def sl_transfer(coeff, z, t, s):
    """T_z(t, s): maps the state at s to the state at t."""
    lo, hi = min(s, t), max(s, t)
    return _Propagator(coeff, z, lo, hi).matrix(t, s)


def sl_propagate(coeff, z, init, targets):
    """States of the solution through ``init`` at every target (sorted ascending)."""
    targets = [float(t) for t in targets]
    if any(t1 < t0 for t0, t1 in zip(targets, targets[1:])):
        raise ValueError("targets must be sorted ascending")
    if not targets:
        return []
    lo, hi = min(targets[0], init.t), max(targets[-1], init.t)
    prop = _Propagator(coeff, z, lo, hi)
    v0 = init.vector
    before = [t for t in targets if t < init.t]
    after = [t for t in targets if t >= init.t]
    back = prop.sweep(v0, init.t, before[::-1])[::-1]
    fwd = prop.sweep(v0, init.t, after)
    return [CState(complex(v[0]), complex(v[1]), t) for t, v in zip(targets, back + fwd)]


# envelopes ---------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    """||T(t, s)|| <= c exp(omega |t - s|) on the window it was built for."""

    c: float
    omega: float
    kind: str

    def bound(self, dt):
        return self.c * math.exp(self.omega * abs(dt))


def _local_unif(coeff, z, lo, hi):
    return unif_norm(coeff.mu_z(z, lo, hi).restricted(lo, hi))


def envelope_constants(coeff, z, lo, hi):
    """Both rigorous envelopes for T on [lo, hi]: (gronwall, energy or None)."""
    U = _local_unif(coeff, z, lo, hi)
    r = coeff.norm_ainv + U
    gron = Envelope(math.sqrt(2.0) * math.exp(r), r, "gronwall")
    if U == 0:
        return gron, None
    w = math.sqrt(U / coeff.norm_ainv)
    s = math.sqrt(U * coeff.norm_ainv)
    energy = Envelope(max(w, 1.0 / w) * math.exp(s / 2), s, "energy")
    return gron, energy


@dataclass(frozen=True)
class EnvelopeCheck:
    gronwall_bound: float
    energy_bound: float
    actual: float
    omega: float


def sl_envelopes(coeff, z, init, t):
    """Both growth bounds and the actual size at ``t``, in a common norm.

    The norm is (w^2 |u|^2 + |a u'|^2)^{1/2} with w^2 = ||mu - z||_unif / ||1/a||;
    the weighted growth rate is (||mu - z||_unif ||1/a||)^{1/2}.
    """
    lo, hi = min(init.t, t) - 1.0, max(init.t, t) + 1.0
    lo, hi = max(lo, coeff.window[0]), min(hi, coeff.window[1])
    U = _local_unif(coeff, z, lo, hi)
    w = math.sqrt(U / coeff.norm_ainv)
    s = math.sqrt(U * coeff.norm_ainv)
    dt = abs(t - init.t)
    (state,) = sl_propagate(coeff, z, init, [t])

    def energy(u, v):
        return math.hypot(w * abs(u), abs(v))

    e0 = energy(init.u, init.au_prime)
    energy_bound = e0 * math.exp(s * (dt + 0.5))
    one_norm0 = abs(init.u) + abs(init.au_prime)
    gron = max(w, 1.0) * one_norm0 * math.exp((coeff.norm_ainv + U) * (dt + 1))
    return EnvelopeCheck(gron, energy_bound, energy(state.u, state.au_prime), w)


def check_envelope(coeff, z, lo, hi, env, samples=64, rtol=1e-9):
    """Spot-check ||T(t, s)|| <= c e^{omega |t - s|} on a grid; raise on violation."""
    prop = _Propagator(coeff, z, lo, hi)
    grid = np.linspace(lo, hi, max(2, int(samples)))
    anchors = sorted({lo, hi, 0.5 * (lo + hi)} | {float(g) for g in grid[:: max(1, len(grid) // 8)]})
    for s in anchors:
        for t in grid:
            n = mat2_norm2(prop.matrix(float(t), s))
            if n > env.bound(t - s) * (1 + rtol):
                raise EnvelopeError(f"||T({t:.4g}, {s:.4g})|| = {n:.6g} exceeds the envelope {env.bound(t - s):.6g}")


# perturbation estimate -----------------------------------------------------


def _sup_bound(coeff, z, init, lo, hi, lip):
    """Rigorous bound on sup |u| over [lo, hi] from grid samples.

    Between grid points |u| moves by at most h * ||1/a|| * sup|a u'| and
    sup|a u'| <= M sup|u|, so sup|u| <= max|u(grid)| / (1 - h * lip).
    """
    h = min(1.0 / 16, 0.25 / lip) if lip > 0 else 1.0 / 16
    n = max(1, math.ceil((hi - lo) / (2 * h)))
    h = (hi - lo) / (2 * n)
    grid = np.linspace(lo, hi, n + 1)
    pts = sorted(set(grid.tolist()))
    states = sl_propagate(coeff, z, init, pts)
    peak = max(abs(s.u) for s in states)
    return peak / (1.0 - h * lip), states


def _unit_integrals(nu, c, base, t):
    """I_k = integral of |phi - c| over the k-th unit interval from base toward t."""
    shifted = nu.translated(-base)
    K = math.ceil(abs(t - base) - 1e-12)
    out = []
    for k in range(1, K + 1):
        lo, hi = (k - 1, k) if t >= base else (-k, -k + 1)
        segs = [sgm for sgm in shifted.phi_segments(lo, hi) if sgm[1] > sgm[0]]
        out.append(_objective(segs, complex(c), False) if segs else 0.0)
    return out


@dataclass(frozen=True)
class _DiffConstants:
    K1: float
    Ka: float
    u_tilde_sup: float


def _diff_constants(coeff, coeff_tilde, z, lo, hi, init_tilde):
    Mt = 2 * coeff_tilde.norm_a + _local_unif(coeff_tilde, z, lo, hi)
    sup_ut, _ = _sup_bound(coeff_tilde, z, init_tilde, lo, hi, coeff_tilde.norm_ainv * Mt)
    K1 = coeff.norm_ainv + coeff_tilde.norm_ainv * Mt
    Ka = coeff.norm_ainv * coeff_tilde.norm_ainv * Mt
    return _DiffConstants(K1, Ka, sup_ut)


def _a_l1(coeff, coeff_tilde, lo, hi):
    diff = coeff.a.combine(coeff_tilde.a, lambda x, y: x - y)
    return float(diff.abs_integral(lo, hi)) if diff.values.size else 0.0


def _diff_rhs(env, consts, integrals, dt, l1):
    """c ||u~|| e^{omega dt} (K1 sum_k e^{-omega(k-1)} I_k + Ka * L1)."""
    w = env.omega
    series = math.fsum(math.exp(-w * (k - 1)) * I for k, I in enumerate(integrals, start=1))
    return env.c * consts.u_tilde_sup * math.exp(w * dt) * (consts.K1 * series + consts.Ka * l1)


def sl_perturbation_bound(coeff, coeff_tilde, interval, t, envelope=None, z=0.0, init=(1.0, 0.0)):
    """(|u(t) - u~(t)|, bound) for solutions started at 0 with matched data.

    u starts from ``init``; u~ starts from (u0, v0 + c u0) with c the
    phi-median offset of mu - mu~ at 0.  The bound is written as
    c ||u~|| e^{omega |t|} [C (||a - a~||_L1 + N) + K1 * excess] where
    N bounds ||mu - mu~||_[alpha, beta], C = K1 * 2/(1 - e^{-omega})^2 + Ka
    and ``excess`` only becomes positive if some unit-interval integral of
    |phi - c| exceeds the 2 k N allowance.
    """
    alpha, beta = interval
    if alpha != int(alpha) or beta != int(beta) or alpha > -1 or beta < 1:
        raise ValueError("interval needs integer endpoints with alpha <= -1 <= 1 <= beta")
    if not alpha <= t <= beta:
        raise ValueError("t must lie in the interval")
    coeff.require(alpha, beta)
    coeff_tilde.require(alpha, beta)
    nu = coeff.mu - coeff_tilde.mu
    _, c0 = wasser_norm(nu, 0.0)
    u0, v0 = complex(init[0]), complex(init[1])
    start = CState(u0, v0, 0.0)
    start_tilde = CState(u0, v0 + c0 * u0, 0.0)
    if envelope is None:
        gron, energy = envelope_constants(coeff, z, alpha, beta)
        candidates = [gron] + ([energy] if energy is not None and energy.omega > 0 else [])
    else:
        c, w = envelope
        candidates = [Envelope(float(c), float(w), "supplied")]
        check_envelope(coeff, z, alpha, beta, candidates[0])
    (ut,) = sl_propagate(coeff, z, start, [t])
    (utt,) = sl_propagate(coeff_tilde, z, start_tilde, [t])
    lhs = abs(ut.u - utt.u)
    if nu.is_zero and _a_l1(coeff, coeff_tilde, alpha, beta) == 0:
        return lhs, 0.0
    consts = _diff_constants(coeff, coeff_tilde, z, alpha, beta, start_tilde)
    N = window_norm_bound(nu, alpha, beta)
    l1 = _a_l1(coeff, coeff_tilde, alpha, beta)
    integrals = _unit_integrals(nu, c0, 0.0, t)
    best = math.inf
    for env in candidates:
        w = env.omega
        S = 2.0 / (-math.expm1(-w)) ** 2
        C = consts.K1 * S + consts.Ka
        excess = math.fsum(
            math.exp(-w * (k - 1)) * max(0.0, I - 2 * k * N) for k, I in enumerate(integrals, start=1)
        )
        rhs = env.c * consts.u_tilde_sup * math.exp(w * abs(t)) * (C * (l1 + N) + consts.K1 * excess)
        best = min(best, rhs)
    return lhs, best


# periodic structure -------------------------------------------------------


def _tile_pc(f, p, lo, hi):
    """p-periodic extension of f restricted to [0, p), over [lo, hi]."""
    base = f.pieces(0.0, p)
    br, vals = [], []
    k0, k1 = math.floor(lo / p) - 1, math.ceil(hi / p) + 1
    for k in range(k0, k1 + 1):
        for x0, x1, v in base:
            y0, y1 = max(x0 + k * p, lo), min(x1 + k * p, hi)
            if y1 > y0:
                if not br:
                    br.append(y0)
                br.append(y1)
                vals.append(v)
    return PiecewiseConstant(br, vals).simplified()


def periodize(coeff, p, alpha):
    """p-periodic copy of (a, mu) restricted to (0, p], tiled over [-p, 2p].

    Returns the new coefficients and diagnostics: the realized unif norm of
    the periodic measure and the agreement window [alpha, p - alpha].
    """
    if not (p > 0 and 0 < alpha <= p / 2):
        raise ValueError("need p > 0 and 0 < alpha <= p/2")
    coeff.require(0.0, p)
    a_m = _tile_pc(coeff.a, p, -p, 2 * p)
    mu_m = coeff.mu.tiled(p, -p, 2 * p)
    per = SLCoeff(a_m, mu_m, norm_a=max(coeff.norm_a, a_m.sup_abs()), norm_ainv=max(coeff.norm_ainv, 1 / a_m.inf_abs()))
    diag = {"unif_norm": unif_norm(mu_m), "agreement": (float(alpha), float(p - alpha))}
    return per, diag


def _measure_gap(m1, m2, lo, hi, tol=1e-9):
    """Largest atom-weight or density mismatch of m1 and m2 on (lo, hi].

    Atoms closer than ``tol`` count as one and density slivers narrower
    than ``tol`` are ignored, so rounding in tiled positions is harmless.
    """
    atoms = sorted(m1.atoms_in(lo, hi) + [(x, -w) for x, w in m2.atoms_in(lo, hi)], key=lambda a: a[0])
    gap, cluster, last = 0.0, 0j, None
    for x, w in atoms:
        if last is not None and x - last > tol:
            gap = max(gap, abs(cluster))
            cluster = 0j
        cluster += w
        last = x
    gap = max(gap, abs(cluster))
    diff = m1.density.combine(m2.density, lambda u, v: u - v, fill=0.0)
    for x0, x1, v in diff.pieces(lo, hi):
        if x1 - x0 > tol:
            gap = max(gap, abs(v))
    return gap


def _periodicity_gap(coeff, p, lo, hi):
    """Largest mismatch between (a, mu) and their p-shifts on [lo, hi]."""
    gap = 0.0
    for x0, x1, v in coeff.a.pieces(lo, hi):
        for y0, y1, w in coeff.a.pieces(x0 + p, x1 + p):
            if y1 - y0 > 1e-9:
                gap = max(gap, abs(v - w))
    shifted = coeff.mu.restricted(lo + p, hi + p).shifted_by(p)
    return max(gap, _measure_gap(shifted, coeff.mu, lo, hi))


def sl_three_block(coeff_periodic, z, p, init):
    """max ||state(t)|| over t in {-p, p, 2p}, relative to ||state(0)||."""
    if init.t != 0:
        raise ValueError("init must sit at t = 0")
    n0 = init.norm()
    if n0 == 0:
        raise ValueError("initial state is zero")
    coeff_periodic.require(-p, 2 * p)
    scale = max(1.0, coeff_periodic.norm_a, coeff_periodic.mu.variation(-p, 2 * p) / (3 * p))
    if _periodicity_gap(coeff_periodic, p, -p, p) > 1e-12 * scale:
        raise ValueError(f"coefficients are not {p}-periodic on the window")
    states = sl_propagate(coeff_periodic, z, init, [-p, p, 2 * p])
    return max(s.norm() for s in states) / n0


# Gordon defect and radius -------------------------------------------------


def disk_radius_sl(norm_ainv, mu_unif, C):
    """max(0, C^2 ||1/a|| - ||mu||_unif)."""
    if not (norm_ainv > 0 and C > 0 and mu_unif >= 0):
        raise ValueError("need norm_ainv > 0, C > 0 and mu_unif >= 0")
    return max(0.0, C * C * norm_ainv - mu_unif)


def sl_gordon_defect(coeff, p):
    """||a - a(. + p)||_L1(-p, p) plus a sup-J bound on ||mu - mu(. + p)||_[-p, p]."""
    if p < 1:
        raise ValueError("period must be at least 1")
    coeff.require(-p, 2 * p)
    l1 = 0.0
    for x0, x1, v in coeff.a.pieces(-p, p):
        for y0, y1, w in coeff.a.pieces(x0 + p, x1 + p):
            l1 += (y1 - y0) * abs(v - w)
    nu = coeff.mu.restricted(-p - 1, p) - coeff.mu.restricted(-1, 2 * p).shifted_by(p)
    nu = LocalMeasure(nu.atoms, nu.density, window=(-p, p))
    return l1 + window_norm_bound(nu, -p, p)


def sl_gordon_rate(coeff, periods):
    out = []
    for p in periods:
        d = sl_gordon_defect(coeff, p)
        out.append(math.inf if d == 0 else -math.log(d) / p)
    return out


# growth scan ----------------------------------------------------------------


@dataclass(frozen=True)
class SLScanRow:
    z: complex
    period: float
    defect: float
    error_bound: float
    periodic_checkpoint: float
    true_checkpoint: float
    max_deviation: float
    certified: bool

    @property
    def consistent(self):
        return (not self.certified) or self.true_checkpoint >= 0.25


def _side_bound(per, coeff, z, base, lo, hi, state_true):
    """Sup over [lo, hi] of |u_per - u| from matched states at ``base``."""
    gron, energy = envelope_constants(per, z, lo, hi)
    consts = _diff_constants(per, coeff, z, lo, hi, state_true)
    nu = per.mu.restricted(lo - 1, hi) - coeff.mu.restricted(lo - 1, hi)
    nu = LocalMeasure(nu.atoms, nu.density, window=(lo, hi))
    far = lo if base - lo >= hi - base else hi
    integrals = _unit_integrals(nu, 0.0, base, far)
    # the left side's a-difference only matters between t and base; take all of it
    l1 = _a_l1(per, coeff, lo, hi)
    best = math.inf
    for env in (gron, energy):
        if env is None or env.omega == 0:
            continue
        best = min(best, _diff_rhs(env, consts, integrals, abs(far - base), l1))
    return best


def sl_growth_scan(coeff, z, periods, alpha=1.0, grid_step=0.25):
    """Per-period bookkeeping of the continuum exclusion argument.

    For each period p (an integer >= 4) the coefficients are periodized from
    (0, p].  True and periodic solutions share their state at ``alpha``; they
    agree on [alpha, p - alpha] and the perturbation estimate, applied from
    the bases alpha + 1 and p - alpha - 1, bounds their distance on [-p, 2p].
    The periodic solution satisfies max(|u(-p)|, |u(p)|, |u(2p)|) >= |u(0)|/2,
    so everything is reported relative to |u_per(0)|.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    periods = list(periods)
    if any(q <= p for p, q in zip(periods, periods[1:])):
        raise ValueError("periods must be increasing")
    rows = []
    for p in periods:
        if p != int(p) or p < 4:
            raise ValueError("periods must be integers >= 4")
        p = int(p)
        if alpha != int(alpha) or not 1 <= alpha <= p / 2 - 1:
            raise ValueError("alpha must be an integer in [1, p/2 - 1]")
        coeff.require(-p, 2 * p)
        per, _ = periodize(coeff, p, alpha)
        defect = sl_gordon_defect(coeff, p)
        left = (alpha + 1, -p, alpha + 2)
        right = (p - alpha - 1, p - alpha - 2, 2 * p)
        for zj in zs:
            zj = complex(zj)
            # pick the start (Neumann or Dirichlet at alpha) with the larger |u_per(0)|
            options = []
            for v in ((1.0, 0.0), (0.0, 1.0)):
                s = CState(v[0], v[1], float(alpha))
                (s0,) = sl_propagate(per, zj, s, [0.0])
                options.append((abs(s0.u), s))
            scale, start = max(options, key=lambda o: o[0])
            grid = np.union1d(np.arange(-p, 2 * p + grid_step / 2, grid_step), [0.0, p, 2 * p])
            up = sl_propagate(per, zj, start, grid)
            ut = sl_propagate(coeff, zj, start, grid)
            dev = max(abs(a.u - b.u) for a, b in zip(up, ut)) / scale
            idx = {float(t): i for i, t in enumerate(grid)}
            per_ck = max(abs(up[idx[float(t)]].u) for t in (-p, p, 2 * p)) / scale
            true_ck = max(abs(ut[idx[float(t)]].u) for t in (-p, p, 2 * p)) / scale
            err = 0.0
            for base, lo, hi in (left, right):
                (sb,) = sl_propagate(coeff, zj, start, [float(base)])
                err = max(err, _side_bound(per, coeff, zj, base, lo, hi, sb))
            err /= scale
            rows.append(SLScanRow(zj, p, defect, err, per_ck, true_ck, dev, err < 0.25))
    rows.sort(key=lambda r: (r.z.real, r.z.imag, r.period))
    return rows


def gordon_comb(weight, periods=(4, 8, 16, 32), rate=2.0, offset=0.5, window=(-40.0, 80.0)):
    """weight * sum_j e^{-rate p_{j-1}} (atom comb of period p_j), first factor 1.

    Each period p_j divides the next, so the measure is p_j-periodic up to a
    defect of size about weight * e^{-rate p_j}.
    """
    lo, hi = window
    atoms = {}
    for j, p in enumerate(periods):
        coef = weight * (1.0 if j == 0 else math.exp(-rate * periods[j - 1]))
        k0, k1 = math.ceil((lo - offset) / p), math.floor((hi - offset) / p)
        for k in range(k0, k1 + 1):
            x = offset + k * p
            atoms[x] = atoms.get(x, 0.0) + coef
    return LocalMeasure(sorted(atoms.items()), window=window)
