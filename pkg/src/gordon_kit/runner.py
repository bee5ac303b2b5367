"""Execute a :class:`RunConfig` and assemble a :class:`ScanReport`."""

import math
import os
from concurrent.futures import ThreadPoolExecutor

import mpmath
import numpy as np

from .config import QUASI_GENERATORS, ConfigError, RunConfig
from .formats import FormatError, jacobi_from_dict, load_coefficients, sl_from_dict
from .gronwall import DiscreteGronwallInput, gronwall_discrete_bound
from .jacobi import (
    CoeffSeq, State2, disk_radius_jacobi, gordon_defect, growth_scan, perturbation_bound,
    rates_from_defects, tail_minima, three_block_gap, transfer, transfer_step,
)
from .mat2c import mat2_det, mat2_inverse, mat2_norm2
from .measures import LocalMeasure, PiecewiseConstant, unif_norm
from .quasiperiodic import (
    Frequency, holder_defect_bound, liouville_frequency, make_sampler, quasi_defect, sample_coeffs,
)
from .report import ScanReport
from .spectrum import truncated_spectrum_report
from .sturm import (
    CState, SLCoeff, disk_radius_sl, gordon_comb, periodize, sl_gordon_defect, sl_growth_scan,
    sl_three_block,
)

EXIT_OK, EXIT_ERROR, EXIT_DECLINED = 0, 1, 2
GRID_FRACTION = 0.9
DIRECT_SAMPLE_LIMIT = 10**7


# coefficient sources -------------------------------------------------------


class _Quasi:
    """A sampled quasiperiodic source: frequency plus the two samplers."""

    def __init__(self, params):
        name = params.get("_name")
        try:
            if name == "liouville":
                self.freq = liouville_frequency(
                    int(params.get("depth", 5)), int(params.get("first_quotient", 1)),
                    **({"bit_budget": int(params["bit_budget"])} if "bit_budget" in params else {}),
                )
            elif name == "golden":
                self.freq = Frequency.golden(int(params.get("depth", 60)))
            else:
                self.freq = Frequency.rational(int(params["p"]), int(params["q"]))
            self.a = _sampler(params.get("a", {"sampler": "constant", "value": 1.0}), "a")
            self.b = _sampler(params.get("b", {"sampler": "constant", "value": 0.0}), "b")
        except KeyError as exc:
            raise ConfigError(f"coefficients.params.{exc.args[0]}", "required field is missing") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("coefficients.params", str(exc)) from None

    def depths(self, cfg):
        if cfg.depths is not None:
            ds = list(cfg.depths)
        elif cfg.periods is not None:
            ds = []
            for p in cfg.periods:
                if p not in self.freq.qs:
                    raise ConfigError("periods", f"{p} is not a convergent denominator of the frequency")
                ds.append(self.freq.qs.index(p, 1) if p in self.freq.qs[1:] else 0)
        else:
            ds = list(range(1, self.freq.depth))
        for m in ds:
            if m > self.freq.depth:
                raise ConfigError("depths", f"depth {m} exceeds the generated depth {self.freq.depth}")
        return ds

    def log_bound(self, m):
        return float(mpmath.log(holder_defect_bound(self.a, self.b, self.freq, m)))

    def coeffs(self, lo, hi):
        return sample_coeffs(self.a, self.b, self.freq, lo, hi)


def _sampler(spec, key):
    if not isinstance(spec, dict) or "sampler" not in spec:
        raise ConfigError(f"coefficients.params.{key}", "expected {\"sampler\": name, ...}")
    params = {k: v for k, v in spec.items() if k != "sampler"}
    try:
        return make_sampler(spec["sampler"], **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"coefficients.params.{key}", str(exc)) from None


def _base_path(path, base_dir):
    return path if os.path.isabs(path) or base_dir is None else os.path.join(base_dir, path)


def jacobi_source(cfg, base_dir=None, window=None):
    """CoeffSeq (or a :class:`_Quasi`) described by the config."""
    c = cfg.coefficients
    try:
        if "inline" in c:
            return jacobi_from_dict(c["inline"])
        if "file" in c:
            return load_coefficients(_base_path(c["file"], base_dir), "jacobi")
    except FormatError as exc:
        raise ConfigError("coefficients", str(exc)) from None
    name, params = c["generator"], dict(c["params"])
    if name in QUASI_GENERATORS:
        params["_name"] = name
        return _Quasi(params)
    lo, hi = params.get("window", window)
    try:
        return CoeffSeq.constant(complex(*_pair(params.get("a", 1.0))), complex(*_pair(params.get("b", 0.0))), int(lo), int(hi))
    except (TypeError, ValueError) as exc:
        raise ConfigError("coefficients.params", str(exc)) from None


def _pair(v):
    return (v[0], v[1]) if isinstance(v, list) else (v, 0.0)


def sl_source(cfg, base_dir=None):
    c = cfg.coefficients
    try:
        if "inline" in c:
            return sl_from_dict(c["inline"])
        if "file" in c:
            return load_coefficients(_base_path(c["file"], base_dir), "sl")
    except FormatError as exc:
        raise ConfigError("coefficients", str(exc)) from None
    params = dict(c["params"])
    try:
        a = float(params.pop("a", 1.0))
        if c["generator"] == "gordon_comb":
            if "weight" not in params:
                raise ConfigError("coefficients.params.weight", "required field is missing")
            for key in ("periods", "window"):
                if key in params:
                    params[key] = tuple(params[key])
            mu = gordon_comb(**params)
        else:
            lo, hi = params.get("window", (-40.0, 80.0))
            mu = LocalMeasure.lebesgue(lo, hi, float(params.get("density", 0.0)))
        lo, hi = mu.window
        return SLCoeff(PiecewiseConstant.constant(a, lo, hi), mu)
    except TypeError as exc:
        raise ConfigError("coefficients.params", str(exc)) from None


# scans ------------------------------------------------------------------------


def _chunks(zs, n):
    n = max(1, min(n, len(zs)))
    size = math.ceil(len(zs) / n)
    return [zs[i : i + size] for i in range(0, len(zs), size)]


def _parallel(fn, zs, threads):
    parts = _chunks(zs, threads)
    if len(parts) == 1:
        return fn(parts[0])
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        results = list(pool.map(fn, parts))
    return [r for part in results for r in part]


SCAN_COLUMNS = [
    "z", "period", "defect", "error_bound", "periodic_checkpoint", "true_checkpoint",
    "max_deviation", "certified", "in_disk",
]


def _scan_report(cfg, rows, radius, grid_radius, meta):
    rows = sorted(rows, key=lambda r: (r.z.real, r.z.imag, r.period))
    out = []
    for r in rows:
        out.append({
            "z": r.z, "period": r.period, "defect": r.defect, "error_bound": r.error_bound,
            "periodic_checkpoint": r.periodic_checkpoint, "true_checkpoint": r.true_checkpoint,
            "max_deviation": r.max_deviation, "certified": r.certified,
            "in_disk": abs(r.z) < radius,
        })
    last = max(r.period for r in rows) if rows else None
    uncertified = sorted({r.z for r in rows if r.period == last and not r.certified}, key=lambda z: (z.real, z.imag))
    inconsistent = [r for r in rows if r.certified and r.true_checkpoint < 0.25]
    meta.update({
        "disk_radius": radius, "grid_radius": grid_radius, "grid_counts": list(cfg.grid.counts),
        "grid_center": cfg.grid.center, "uncertified_points": len(uncertified),
        "inconsistent_rows": len(inconsistent), "config": cfg.to_dict(),
    })
    declined = not rows or bool(uncertified) or bool(inconsistent)
    return ScanReport(cfg.mode, SCAN_COLUMNS, out, meta, declined)


def _grid_radius(cfg, radius):
    return cfg.grid.radius if cfg.grid.radius is not None else GRID_FRACTION * radius


def run_jacobi_scan(cfg, threads=1, base_dir=None):
    pmax = max(cfg.periods) if cfg.periods else None
    src = jacobi_source(cfg, base_dir, window=(-(pmax or 1) - 1, 2 * (pmax or 1) + 2))
    log_bounds = None
    if isinstance(src, _Quasi):
        depths = src.depths(cfg)
        periods = [src.freq.qs[m] for m in depths]
        log_bounds = [src.log_bound(m) for m in depths]
        pmax = max(periods)
        if pmax > DIRECT_SAMPLE_LIMIT:
            raise ConfigError("depths", f"period {pmax} is too large to sample directly")
        coeffs = src.coeffs(-pmax - 1, 2 * pmax + 2)
    else:
        coeffs = src
        periods = list(cfg.periods)
    radius = disk_radius_jacobi(coeffs.norm_a, coeffs.norm_ainv, coeffs.norm_b, cfg.C)
    gr = _grid_radius(cfg, radius)
    meta = {"norms": {"norm_a": coeffs.norm_a, "norm_ainv": coeffs.norm_ainv, "norm_b": coeffs.norm_b},
            "periods": periods}
    if gr <= 0:
        meta["note"] = "certified disk is empty; nothing to scan"
        return _scan_report(cfg, [], radius, gr, meta)
    zs = cfg.grid.points(gr)
    rows = _parallel(lambda part: growth_scan(coeffs, part, periods, log_defect_bounds=log_bounds), zs, threads)
    return _scan_report(cfg, rows, radius, gr, meta)


def run_sl_scan(cfg, threads=1, base_dir=None):
    coeff = sl_source(cfg, base_dir)
    mu_unif = unif_norm(coeff.mu)
    radius = disk_radius_sl(coeff.norm_ainv, mu_unif, cfg.C)
    gr = _grid_radius(cfg, radius)
    meta = {"norms": {"norm_a": coeff.norm_a, "norm_ainv": coeff.norm_ainv, "mu_unif": mu_unif},
            "periods": list(cfg.periods), "alpha": cfg.alpha}
    if gr <= 0:
        meta["note"] = "certified disk is empty; nothing to scan"
        return _scan_report(cfg, [], radius, gr, meta)
    zs = cfg.grid.points(gr)
    rows = _parallel(lambda part: sl_growth_scan(coeff, part, cfg.periods, alpha=cfg.alpha), zs, threads)
    return _scan_report(cfg, rows, radius, gr, meta)


# bounds and defects -----------------------------------------------------------


def run_jacobi_bound(cfg, base_dir=None):
    if cfg.norms is not None:
        n = cfg.norms
    else:
        src = jacobi_source(cfg, base_dir, window=(0, 0))
        if isinstance(src, _Quasi):
            n = {"norm_a": src.a.sup, "norm_ainv": 1.0 / src.a.inf_modulus, "norm_b": src.b.sup}
        else:
            n = {"norm_a": src.norm_a, "norm_ainv": src.norm_ainv, "norm_b": src.norm_b}
    try:
        r = disk_radius_jacobi(n["norm_a"], n["norm_ainv"], n["norm_b"], cfg.C)
    except ValueError as exc:
        raise ConfigError("norms", str(exc)) from None
    row = dict(n, C=cfg.C, disk_radius=r)
    return ScanReport(cfg.mode, ["norm_a", "norm_ainv", "norm_b", "C", "disk_radius"], [row],
                      {"disk_radius": r, "config": cfg.to_dict()}, declined=r <= 0)


def run_sl_bound(cfg, base_dir=None):
    if cfg.norms is not None:
        n = dict(cfg.norms)
    else:
        coeff = sl_source(cfg, base_dir)
        n = {"norm_ainv": coeff.norm_ainv, "mu_unif": unif_norm(coeff.mu)}
    try:
        r = disk_radius_sl(n["norm_ainv"], n["mu_unif"], cfg.C)
    except ValueError as exc:
        raise ConfigError("norms", str(exc)) from None
    row = dict(n, C=cfg.C, disk_radius=r)
    return ScanReport(cfg.mode, ["norm_ainv", "mu_unif", "C", "disk_radius"], [row],
                      {"disk_radius": r, "config": cfg.to_dict()}, declined=r <= 0)


def _log(x):
    return -math.inf if x == 0 else math.log(x)


def run_jacobi_defect(cfg, base_dir=None):
    pmax = max(cfg.periods) if cfg.periods else 1
    src = jacobi_source(cfg, base_dir, window=(-pmax, 2 * pmax + 1))
    rows = []
    if isinstance(src, _Quasi):
        depths = src.depths(cfg)
        periods = [src.freq.qs[m] for m in depths]
        logs = [float(mpmath.log(d)) if d != 0 else -math.inf
                for d in (quasi_defect(src.a, src.b, src.freq, m) for m in depths)]
        bounds = [src.log_bound(m) for m in depths]
    else:
        depths = [None] * len(cfg.periods)
        periods = list(cfg.periods)
        logs = [_log(gordon_defect(src, p)) for p in periods]
        bounds = [None] * len(periods)
    rates = [math.inf if lg == -math.inf else -lg / p for lg, p in zip(logs, periods)]
    tails = tail_minima(rates)
    for m, p, lg, b, r, t in zip(depths, periods, logs, bounds, rates, tails):
        rows.append({"depth": m, "period": p, "defect": math.exp(lg), "log_defect": lg,
                     "log_defect_bound": b, "rate": r, "tail_min_rate": t})
    cols = ["depth", "period", "defect", "log_defect", "log_defect_bound", "rate", "tail_min_rate"]
    return ScanReport(cfg.mode, cols, rows, {"config": cfg.to_dict()})


def run_sl_defect(cfg, base_dir=None):
    coeff = sl_source(cfg, base_dir)
    periods = list(cfg.periods)
    defects = [sl_gordon_defect(coeff, p) for p in periods]
    rates = rates_from_defects(defects, periods)
    rows = [{"period": p, "defect": d, "rate": r, "tail_min_rate": t}
            for p, d, r, t in zip(periods, defects, rates, tail_minima(rates))]
    return ScanReport(cfg.mode, ["period", "defect", "rate", "tail_min_rate"], rows, {"config": cfg.to_dict()})


def run_quasi_gen(cfg, base_dir=None):
    if "generator" not in cfg.coefficients:
        raise ConfigError("coefficients.generator", "quasi-gen needs a quasiperiodic generator")
    src = jacobi_source(cfg, base_dir)
    freq = src.freq
    radius = disk_radius_jacobi(src.a.sup, 1.0 / src.a.inf_modulus, src.b.sup, cfg.C)
    rows = []
    for m in src.depths(cfg):
        q = freq.qs[m]
        if q > DIRECT_SAMPLE_LIMIT and (src.a.trig_coeffs is None or src.b.trig_coeffs is None):
            raise ConfigError("depths", f"q_{m} is too large for non-trigonometric samplers")
        d = quasi_defect(src.a, src.b, freq, m)
        lg = float(mpmath.log(d)) if d != 0 else -math.inf
        try:
            liouville = freq.satisfies_liouville_bound(m)
        except IndexError:
            liouville = None
        rows.append({
            "depth": m, "q": q, "q_bits": q.bit_length(), "liouville_bound": liouville,
            "log_defect": lg, "log_defect_bound": src.log_bound(m), "weighted_log_defect": cfg.C * q + lg,
        })
    weighted = [r["weighted_log_defect"] for r in rows]
    decaying = len(weighted) > 1 and all(b < a for a, b in zip(weighted, weighted[1:]))
    meta = {"disk_radius": radius, "decaying": decaying,
            "partial_quotients": list(freq.partial_quotients),
            "config": cfg.to_dict()}
    cols = ["depth", "q", "q_bits", "liouville_bound", "log_defect", "log_defect_bound", "weighted_log_defect"]
    return ScanReport(cfg.mode, cols, rows, meta, declined=not decaying or radius <= 0)


def run_spectrum(cfg, base_dir=None):
    start = 0 if cfg.start is None else cfg.start
    src = jacobi_source(cfg, base_dir, window=(start, start + cfg.N + 1))
    coeffs = src.coeffs(start, start + cfg.N + 1) if isinstance(src, _Quasi) else src
    if cfg.start is None:
        start = coeffs.n_lo
    pairs = truncated_spectrum_report(coeffs, cfg.N, start)
    radius = None
    if cfg.C is not None:
        radius = disk_radius_jacobi(coeffs.norm_a, coeffs.norm_ainv, coeffs.norm_b, cfg.C)
    rows = [{"index": i, "eigenvalue": p.value, "modulus": abs(p.value), "residual": p.residual,
             "edge_mass": p.edge_mass, "in_disk": None if radius is None else abs(p.value) < radius}
            for i, p in enumerate(pairs)]
    meta = {"N": cfg.N, "start": start, "disk_radius": radius,
            "inside_disk": None if radius is None else sum(bool(r["in_disk"]) for r in rows),
            "config": cfg.to_dict()}
    cols = ["index", "eigenvalue", "modulus", "residual", "edge_mass", "in_disk"]
    return ScanReport(cfg.mode, cols, rows, meta)


# self-checks ---------------------------------------------------------------------


def _rand_c(rng, lo, hi):
    return rng.uniform(lo, hi) * np.exp(2j * np.pi * rng.uniform())


def _random_window(rng, n):
    a = [_rand_c(rng, 0.1, 10) for _ in range(n)]
    b = [_rand_c(rng, 0, 10) for _ in range(n)]
    return CoeffSeq(0, a, b)


def _check_determinant(rng, trials):
    worst = 0.0
    for _ in range(trials):
        c = _random_window(rng, 4)
        worst = max(worst, abs(mat2_det(transfer_step(c, _rand_c(rng, 0, 10), 1)) - 1))
    return worst, 1e-10


def _check_cocycle(rng, trials):
    worst = 0.0
    for _ in range(trials):
        c = _random_window(rng, 8)
        z = _rand_c(rng, 0, 10)
        lhs = transfer(c, z, 5, 1)
        rhs = transfer(c, z, 5, 3) @ transfer(c, z, 3, 1)
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs)))
    return worst, 1e-9


def _check_unimodular(rng, trials):
    worst = 0.0
    for _ in range(trials):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        A = A / np.sqrt(np.linalg.det(A))
        n = mat2_norm2(A)
        worst = max(worst, abs(n - mat2_norm2(mat2_inverse(A))) / n)
    return worst, 1e-9


def _check_three_block(rng, trials):
    worst = -math.inf
    for _ in range(trials):
        p = int(rng.integers(1, 9))
        a = [_rand_c(rng, 0.2, 3) for _ in range(p)]
        b = [_rand_c(rng, 0, 3) for _ in range(p)]
        idx = np.arange(-p, 2 * p + 2)
        c = CoeffSeq(-p, [a[i % p] for i in idx], [b[i % p] for i in idx])
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        r = three_block_gap(c, _rand_c(rng, 0, 4), p, State2(v[0], v[1], 0))
        worst = max(worst, 0.5 - r)
    return worst, 1e-10


def _check_sl_three_block(rng, trials):
    worst = -math.inf
    for _ in range(trials):
        p = int(rng.integers(1, 4))
        br = np.sort(rng.uniform(0, p, 2))
        a = PiecewiseConstant([-1, br[0], br[1], p + 1], rng.uniform(0.3, 2, 3))
        mu = LocalMeasure([(rng.uniform(0.01, p), rng.normal())], [-1, br[0], p + 1], rng.normal(size=2), window=(-1, p + 1))
        per, _ = periodize(SLCoeff(a, mu), p, p / 2)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        r = sl_three_block(per, _rand_c(rng, 0, 3), p, CState(v[0], v[1], 0.0))
        worst = max(worst, 0.5 - r)
    return worst, 1e-10


def _check_perturbation(rng, trials):
    worst = -math.inf
    for _ in range(trials):
        n = int(rng.integers(-6, 7)) or 1
        a = [_rand_c(rng, 0.3, 3) for _ in range(16)]
        b = [_rand_c(rng, 0, 3) for _ in range(16)]
        at = [x + 0.05 * _rand_c(rng, 0, 1) for x in a]
        bt = [x + 0.05 * _rand_c(rng, 0, 1) for x in b]
        c, ct = CoeffSeq(-8, a, b), CoeffSeq(-8, at, bt)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        lhs, rhs = perturbation_bound(c, ct, _rand_c(rng, 0, 2), State2(v[0], v[1], 0), n)
        worst = max(worst, lhs - rhs * (1 + 1e-12))
    return worst, 0.0


def _check_gronwall(rng, trials):
    worst = -math.inf
    for _ in range(trials):
        n = int(rng.integers(1, 12))
        al = 1 + rng.exponential(0.5, n)
        be = rng.exponential(1.0, n)
        xs = [0.0]
        for k in range(n):
            xs.append(rng.uniform(0, 1) * (al[k] * xs[-1] + be[k]))
        data = DiscreteGronwallInput(al, be, xs)
        worst = max(worst, max(xs[k] - gronwall_discrete_bound(data, k) for k in range(n + 1)))
    return worst, 0.0


def _check_spectrum(rng, trials):
    c = CoeffSeq.constant(1.0, 0.0, 0, 11)
    ev = sorted(p.value.real for p in truncated_spectrum_report(c, 10, 0))
    exact = sorted(2 * math.cos(k * math.pi / 11) for k in range(1, 11))
    return max(abs(x - y) for x, y in zip(ev, exact)), 1e-8


CHECKS = [
    ("transfer_determinant", _check_determinant),
    ("transfer_cocycle", _check_cocycle),
    ("unimodular_norm", _check_unimodular),
    ("three_block_discrete", _check_three_block),
    ("three_block_continuum", _check_sl_three_block),
    ("perturbation_discrete", _check_perturbation),
    ("gronwall_discrete", _check_gronwall),
    ("spectrum_free_jacobi", _check_spectrum),
]


def run_verify(cfg, base_dir=None):
    rows = []
    for i, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([cfg.seed, i])
        worst, limit = fn(rng, cfg.trials)
        rows.append({"check": name, "trials": cfg.trials, "worst": float(worst), "limit": limit,
                     "passed": bool(worst <= limit)})
    return ScanReport(cfg.mode, ["check", "trials", "worst", "limit", "passed"], rows,
                      {"config": cfg.to_dict()}, declined=not all(r["passed"] for r in rows))


def run(cfg: RunConfig, threads=1, base_dir=None):
    """Dispatch on ``cfg.mode``; rows do not depend on ``threads``."""
    if threads < 1:
        raise ValueError("threads must be positive")
    if cfg.mode == "jacobi-scan":
        return run_jacobi_scan(cfg, threads, base_dir)
    if cfg.mode == "sl-scan":
        return run_sl_scan(cfg, threads, base_dir)
    single = {
        "jacobi-bound": run_jacobi_bound, "jacobi-defect": run_jacobi_defect,
        "quasi-gen": run_quasi_gen, "sl-bound": run_sl_bound, "sl-defect": run_sl_defect,
        "spectrum": run_spectrum, "verify": run_verify,
    }
    return single[cfg.mode](cfg, base_dir)
