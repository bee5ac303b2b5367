"""Acceptance criteria 1-10, each at its stated tolerance and time limit."""

import math
import time

import numpy as np
import pytest

from gordon_kit.config import validate
from gordon_kit.gronwall import DiscreteGronwallInput, gronwall_continuous_bound, gronwall_discrete_bound
from gordon_kit.jacobi import CoeffSeq, State2, perturbation_bound, three_block_gap, transfer, transfer_step
from gordon_kit.mat2c import mat2_det, mat2_inverse, mat2_norm2
from gordon_kit.measures import LocalMeasure, PiecewiseConstant, wasser_norm
from gordon_kit.runner import run
from gordon_kit.spectrum import truncated_spectrum
from gordon_kit.sturm import CState, SLCoeff, periodize, sl_perturbation_bound, sl_propagate, sl_three_block

from acceptance_log import record
from conftest import rand_c
from oracles import gronwall_equality_solution, measure_norm_bruteforce, rk4_linear


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def random_jacobi(rng, lo, n):
    return CoeffSeq(lo, [rand_c(rng, 0.1, 10) for _ in range(n)], [rand_c(rng, 0, 10) for _ in range(n)])


def random_sl_cell(rng, p, max_pieces=6, max_atoms=3):
    """Random (a, mu) on [0, p] with at most the given numbers of pieces and atoms."""
    k = int(rng.integers(1, max_pieces + 1))
    br = np.concatenate(([0.0], np.sort(rng.uniform(0, p, k - 1)), [float(p)]))
    a = PiecewiseConstant(br, rng.uniform(0.3, 3.0, k))
    n_atoms = int(rng.integers(0, max_atoms + 1))
    atoms = [(float(x), float(w)) for x, w in zip(rng.uniform(0.01, p, n_atoms), rng.normal(size=n_atoms))]
    mu = LocalMeasure(atoms, br, rng.normal(size=k), window=(0.0, float(p)))
    return SLCoeff(a, mu)


def test_criterion_01_transfer_structure():
    rng = np.random.default_rng(101)
    with Timer() as t:
        c = random_jacobi(rng, 0, 10_002)
        zs = [rand_c(rng, 0, 10) for _ in range(10_000)]
        det_err = max(abs(mat2_det(transfer_step(c, z, n)) - 1) for n, z in enumerate(zs))
        coc_err = 0.0
        for _ in range(1000):
            n = int(rng.integers(0, 9_970))
            n, k, m = sorted(n + rng.integers(0, 31, size=3))
            z = zs[n]
            Tmn = transfer(c, z, m, n)
            err = np.linalg.norm(transfer(c, z, m, k) @ transfer(c, z, k, n) - Tmn) / np.linalg.norm(Tmn)
            coc_err = max(coc_err, err)
    ok = det_err <= 1e-10 and coc_err <= 1e-9 and t.seconds < 5
    record(1, ok, f"max|det-1|={det_err:.1e}, cocycle rel={coc_err:.1e}", t.seconds, 5)
    assert ok


def test_criterion_02_three_block():
    rng = np.random.default_rng(102)
    worst_d, worst_c = math.inf, math.inf
    with Timer() as t:
        for _ in range(1000):
            p = int(rng.integers(1, 21))
            a0 = [rand_c(rng, 0.1, 3) for _ in range(p)]
            b0 = [rand_c(rng, 0, 3) for _ in range(p)]
            idx = np.arange(-p, 2 * p + 2)
            c = CoeffSeq(-p, [a0[i % p] for i in idx], [b0[i % p] for i in idx])
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            worst_d = min(worst_d, three_block_gap(c, rand_c(rng, 0, 5), p, State2(v[0], v[1], 0)))
        for _ in range(1000):
            p = int(rng.integers(1, 6))
            per, _ = periodize(random_sl_cell(rng, p), p, p / 2)
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            worst_c = min(worst_c, sl_three_block(per, rand_c(rng, 0, 5), p, CState(v[0], v[1], 0.0)))
    ok = min(worst_d, worst_c) >= 0.5 - 1e-10 and t.seconds < 30
    record(2, ok, f"min ratio discrete={worst_d:.4f}, continuum={worst_c:.4f}", t.seconds, 30)
    assert ok


def test_criterion_03_perturbation():
    rng = np.random.default_rng(103)
    bad_d = bad_c = 0
    negative = 0
    with Timer() as t:
        for _ in range(1000):
            n = int(rng.integers(-10, 11)) or -1
            negative += n < 0
            c = random_jacobi(rng, -12, 25)
            scale = 10.0 ** rng.uniform(-6, 0)
            ct = CoeffSeq(-12, c.a + 0.1 * scale * np.array([rand_c(rng, 0, 1) for _ in range(25)]),
                          c.b + scale * np.array([rand_c(rng, 0, 1) for _ in range(25)]))
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            lhs, rhs = perturbation_bound(c, ct, rand_c(rng, 0, 5), State2(v[0], v[1], 0), n)
            bad_d += not lhs <= rhs * (1 + 1e-9)
        for _ in range(1000):
            c = _sl_window(rng)
            ct = _sl_window(rng, base=c if rng.uniform() < 0.5 else None)
            tt = float(rng.uniform(-3, 3))
            lhs, rhs = sl_perturbation_bound(c, ct, (-3, 3), tt, z=rand_c(rng, 0, 1),
                                             init=(1.0, complex(rng.normal())))
            bad_c += not lhs <= rhs * (1 + 1e-9)
    ok = bad_d == 0 and bad_c == 0 and t.seconds < 30
    record(3, ok, f"violations discrete={bad_d}, continuum={bad_c} ({negative} backward discrete cases)",
           t.seconds, 30)
    assert ok


def _sl_window(rng, base=None):
    """Random coefficients on [-4, 5]; with ``base``, a small perturbation of it."""
    W = (-4.0, 5.0)
    if base is None:
        k = int(rng.integers(1, 5))
        br = np.concatenate(([W[0]], np.sort(rng.uniform(-3, 4, k - 1)), [W[1]]))
        atoms = [(float(x), float(w)) for x, w in zip(rng.uniform(-3, 4, 2), rng.normal(size=2))]
        return SLCoeff(PiecewiseConstant(br, rng.uniform(0.5, 2, k)), LocalMeasure(atoms, br, rng.normal(size=k), window=W))
    eps = 10.0 ** rng.uniform(-5, -1)
    extra = LocalMeasure([(float(rng.uniform(-3, 4)), eps * float(rng.normal()))], window=W)
    a = base.a.map_values(lambda v: v * (1 + eps * rng.uniform(-1, 1)))
    return SLCoeff(a, base.mu + extra)


def test_criterion_04_gronwall():
    rng = np.random.default_rng(104)
    bad_d = bad_c = 0
    checked = 0
    with Timer() as t:
        for _ in range(1000):
            n = int(rng.integers(1, 30))
            al = 1 + rng.exponential(0.5, n)
            be = rng.exponential(1.0, n)
            xs = [0.0]
            for k in range(n):
                xs.append(rng.uniform(0, 1) * (al[k] * xs[-1] + be[k]))
            data = DiscreteGronwallInput(al, be, xs)
            bad_d += any(xs[k] > gronwall_discrete_bound(data, k) * (1 + 1e-12) for k in range(n + 1))
        for i in range(300):
            atoms = [(float(x), float(rng.exponential(0.7))) for x in rng.uniform(0, 3, int(rng.integers(0, 4)))]
            if i % 2:
                atoms += [(0.0, float(rng.exponential(0.7))), (3.0, float(rng.exponential(0.7)))]
            atoms = sorted(dict(atoms).items())
            m = int(rng.integers(0, 4))
            pieces = []
            if m:
                br = np.sort(rng.uniform(-0.5, 3.5, m + 1))
                pieces = [(float(br[j]), float(br[j + 1]), float(rng.exponential(0.8))) for j in range(m)]
                mu = LocalMeasure(atoms, [p[0] for p in pieces] + [pieces[-1][1]], [p[2] for p in pieces])
            else:
                mu = LocalMeasure(atoms)
            k = int(rng.integers(1, 4))
            a_br = np.concatenate(([-1.0], np.sort(rng.uniform(0, 3, k - 1)), [10.0]))
            a_vals = rng.uniform(0, 2, k)
            alpha = PiecewiseConstant(a_br, a_vals)
            pts = sorted({0.0, 3.0} | {x for x, _ in atoms} | {x for p in pieces for x in p[:2] if 0 <= x <= 3}
                         | {float(b) for b in a_br if 0 <= b <= 3})
            for s in pts:
                u = gronwall_equality_solution(a_br, a_vals, atoms, pieces, s)
                bad_c += not u <= gronwall_continuous_bound(alpha, mu, s) * (1 + 1e-10) + 1e-12
                checked += 1
    ok = bad_d == 0 and bad_c == 0 and t.seconds < 10
    record(4, ok, f"violations discrete={bad_d}, continuous={bad_c} of {checked} breakpoints", t.seconds, 10)
    assert ok


def test_criterion_05_unimodular_norm():
    rng = np.random.default_rng(105)
    with Timer() as t:
        worst = 0.0
        for _ in range(1000):
            A = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) * 10.0 ** rng.uniform(-2, 2, size=(2, 2))
            A = A / np.sqrt(np.linalg.det(A))
            n = mat2_norm2(A)
            worst = max(worst, abs(n - mat2_norm2(mat2_inverse(A))) / n)
    ok = worst <= 1e-9 and t.seconds < 1
    record(5, ok, f"max | ||A|| - ||A^-1|| | / ||A|| = {worst:.1e}", t.seconds, 1)
    assert ok


def test_criterion_06_measure_norm_sandwich():
    rng = np.random.default_rng(106)
    worst_lo, worst_hi, ratios = math.inf, -math.inf, []
    with Timer() as t:
        for i in range(200):
            complex_w = i % 2 == 1
            k = int(rng.integers(0, 5))
            atoms = [(float(x), complex(w)) for x, w in zip(
                rng.uniform(-1, 1, k), rng.normal(size=k) + (1j * rng.normal(size=k) if complex_w else 0))]
            m = int(rng.integers(0, 5))
            pieces = []
            if m:
                br = np.sort(rng.uniform(-1, 1, m + 1))
                vals = rng.normal(size=m) + (1j * rng.normal(size=m) if complex_w else 0)
                pieces = [(float(br[j]), float(br[j + 1]), complex(vals[j])) for j in range(m)]
                mu = LocalMeasure(atoms, br, vals, window=(-3, 3))
            else:
                mu = LocalMeasure(atoms, window=(-3, 3))
            x = float(rng.uniform(-0.5, 0.5))
            J, _ = wasser_norm(mu, x)
            sup = measure_norm_bruteforce(atoms, pieces, x, cells=800, angles=48, real=not complex_w)
            worst_lo = min(worst_lo, sup - (J / 2 - 1e-6))
            worst_hi = max(worst_hi, sup - (J + 1e-6))
            if J > 0:
                ratios.append(sup / J)
    ok = worst_lo >= 0 and worst_hi <= 0 and t.seconds < 60
    record(6, ok, f"brute-force sup / J in [{min(ratios):.4f}, {max(ratios):.4f}] over {len(ratios)} nonzero measures", t.seconds, 60)
    assert ok


A7 = {
    "mode": "jacobi-scan",
    "C": 2 * math.log(2 + 5e-5),
    "coefficients": {"generator": "liouville", "params": {
        "depth": 5, "first_quotient": 1,
        "a": {"sampler": "constant", "value": 1.0},
        "b": {"sampler": "trig", "coeffs": {"1": [5e-7, 0], "-1": [5e-7, 0]}},
    }},
    "depths": [2, 3, 4],
    "grid": {"counts": [5, 5]},
}


def test_criterion_07_discrete_certification():
    with Timer() as t:
        rep = run(validate(A7), threads=2)
    rows = rep.rows
    zs = {r["z"] for r in rows}
    ok = (len(zs) == 25 and len(rows) == 75 and rep.meta["disk_radius"] > 0 and not rep.declined
          and all(r["certified"] and r["true_checkpoint"] >= 0.25 and r["in_disk"] for r in rows)
          and t.seconds < 120)
    n_cert = sum(r["certified"] for r in rows)
    record(7, ok, f"{n_cert}/{len(rows)} (z, period) rows certified, periods {rep.meta['periods']}, "
                  f"disk radius {rep.meta['disk_radius']:.3e}", t.seconds, 120)
    assert ok


A8_FRACTION = 0.5


def test_criterion_08_continuum_certification():
    cfg = {"mode": "sl-scan", "C": 1.0, "coefficients": {"generator": "gordon_comb", "params": {"weight": 0.01}},
           "periods": [4, 8, 16], "grid": {"counts": [3, 3]}}
    radius = run(validate({"mode": "sl-bound", "C": 1.0, "coefficients": cfg["coefficients"]})).meta["disk_radius"]
    cfg["grid"]["radius"] = A8_FRACTION * radius
    with Timer() as t:
        rep = run(validate(cfg), threads=2)
    past_first = [r for r in rep.rows if r["period"] > 4]
    ok = (len({r["z"] for r in rep.rows}) == 9 and len(past_first) == 18
          and all(r["certified"] and r["true_checkpoint"] >= 0.25 and r["in_disk"] for r in past_first)
          and t.seconds < 120)
    record(8, ok, f"{sum(r['certified'] for r in past_first)}/{len(past_first)} rows past the first period "
                  f"certified on a grid of radius {A8_FRACTION} x {radius:.4f}", t.seconds, 120)
    assert ok


def test_criterion_09_spectrum():
    with Timer() as t:
        c = CoeffSeq.constant(1.0, 0.0, 0, 12)
        vals = np.array(truncated_spectrum(c, 10))
        ref = np.sort(2 * np.cos(np.arange(1, 11) * np.pi / 11))
        err10 = float(np.max(np.abs(vals - ref)))
        b0, b1, a1 = 0.3 - 0.2j, -1.1 + 0.4j, 0.7 + 0.5j
        c2 = CoeffSeq(0, [1.0, a1, 1.0], [b0, b1, 0.0])
        tr, det = b0 + b1, b0 * b1 - a1 * a1
        disc = np.sqrt(tr * tr / 4 - det)
        quad = sorted([tr / 2 + disc, tr / 2 - disc], key=lambda v: (v.real, v.imag))
        err2 = max(abs(x - y) for x, y in zip(truncated_spectrum(c2, 2), quad))
    ok = err10 <= 1e-8 and err2 <= 1e-12 and t.seconds < 1
    record(9, ok, f"N=10 max error {err10:.1e}, N=2 max error {err2:.1e}", t.seconds, 1)
    assert ok


def test_criterion_10_propagator_vs_rk4():
    rng = np.random.default_rng(110)
    worst = 0.0
    with Timer() as t:
        for _ in range(20):
            br = np.concatenate(([0.0], np.sort(rng.uniform(0.2, 2.8, 2)), [3.0]))
            a_vals, rho = rng.uniform(0.5, 2, 3), rng.normal(size=3)
            coeff = SLCoeff(PiecewiseConstant(br, a_vals), LocalMeasure((), br, rho, window=(0.0, 3.0)))
            z = complex(rand_c(rng, 0, 2))
            init = (complex(rand_c(rng, 0.5, 1)), complex(rand_c(rng, 0, 1)))
            (s,) = sl_propagate(coeff, z, CState(*init, t=0.0), [3.0])
            ref = rk4_linear([(br[i], br[i + 1], a_vals[i], rho[i]) for i in range(3)], z, init, 0.0, 3.0, h=1e-4)
            worst = max(worst, float(np.max(np.abs(np.array([s.u, s.au_prime]) - ref))))
    ok = worst <= 1e-6 and t.seconds < 30
    record(10, ok, f"max deviation {worst:.1e}", t.seconds, 30)
    assert ok
