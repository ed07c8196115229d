"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s -v``.
"""

import math
import time

import numpy as np
import pytest

from ahst.config import RunConfig, NoiseConfig
from ahst.experiments import table1
from ahst.imaging import NoiseModel, apply_noise, intensity_image
from ahst.modes import default_r_cut, kernel_p, orthogonality_matrix
from ahst.recon import clipped_eigen_projection, fidelity, fit_waist, frobenius_cost, physicalize, reconstruct
from ahst.states import DensityMatrix, benchmark_states, eigenstate, random_density, rho_m1, truncated_cat
from ahst.wigner import fringe_contrast, wigner, wigner_at
from oracles import lg_product_ft


def _report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
    assert ok, detail


def _simplex_projection(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, len(v) + 1) > css - 1)[0][-1]
    return np.clip(v - (css[k] - 1) / (k + 1), 0, None)


def test_criterion_1_kernel_correctness(capsys, geometry):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    r_cut = default_r_cut(12, geometry.sigma)
    worst = 0.0
    for _ in range(20):
        l1, l2 = (int(v) for v in rng.integers(0, 13, size=2))
        f = r_cut * math.sqrt(rng.uniform())
        phi = rng.uniform(-math.pi, math.pi)
        ref = lg_product_ft(l1, l2, f, phi, geometry.sigma)
        got = complex(kernel_p(l1, l2, f, phi, geometry.sigma))
        worst = max(worst, abs(got - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed < 60
    _report(capsys, 1, "kernel vs numerical transform", ok, f"max rel err {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_orthogonality(capsys, table):
    t0 = time.perf_counter()
    dev = np.abs(orthogonality_matrix(table) - np.eye(169)).max()
    elapsed = time.perf_counter() - t0
    ok = dev <= 1e-3 and elapsed < 300
    _report(capsys, 2, "discrete orthogonality, 169^2 pairs", ok, f"max |deviation| {dev:.2e}, {elapsed:.1f}s")


def test_criterion_3_noiseless_round_trip(capsys, geometry, table):
    t0 = time.perf_counter()
    worst = {"projection": 1.0, "fit": 1.0}
    for seed in range(50):
        rho = random_density(13, rank=1 + seed % 13, seed=1000 + seed)
        image = intensity_image(rho, geometry)
        for method in worst:
            f = fidelity(rho, reconstruct(image, table, 13, method=method).physical)
            worst[method] = min(worst[method], f)
    elapsed = time.perf_counter() - t0
    ok = min(worst.values()) >= 0.99 and elapsed < 300
    detail = ", ".join(f"min F[{m}] {v:.6f}" for m, v in worst.items()) + f", {elapsed:.1f}s"
    _report(capsys, 3, "noiseless round trip, 50 random states", ok, detail)


@pytest.mark.slow
def test_criterion_4_benchmark_states_at_1e6(capsys, table):
    t0 = time.perf_counter()
    cfg = RunConfig(noise=NoiseConfig(photon_budget=1e6), repetitions=10, seed=2024)
    rows = table1(cfg, table=table)
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        for r in rows:
            print(f"    {r.state:<8} {r.mean:.4f} +- {r.std:.4f}")
    worst = min(rows, key=lambda r: r.mean)
    ok = len(rows) == 18 and all(r.mean >= 0.95 for r in rows) and elapsed < 900
    _report(capsys, 4, "18 states x 10 seeds at 1e6 photons", ok,
            f"lowest mean {worst.mean:.4f} ({worst.state}), {elapsed:.1f}s")


def test_criterion_5_physicalization(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    herm = tr = gap = 0.0
    min_eig = 1.0
    exact_gap = 0.0
    for k in range(100):
        d = int(rng.integers(2, 14))
        noise = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        noise -= np.trace(noise) / d * np.eye(d)
        raw = random_density(d, rank=int(rng.integers(1, d + 1)), seed=k).entries + rng.uniform(0.01, 0.3) * noise
        out = physicalize(raw).entries
        herm = max(herm, np.abs(out - out.conj().T).max())
        tr = max(tr, abs(np.trace(out) - 1))
        min_eig = min(min_eig, np.linalg.eigvalsh(out).min())
        s = frobenius_cost(out, raw)
        gap = max(gap, s - frobenius_cost(clipped_eigen_projection(raw), raw))
        h = (raw + raw.conj().T) / 2
        e, v = np.linalg.eigh(h)
        exact = (v * _simplex_projection(e)) @ v.conj().T
        exact_gap = max(exact_gap, abs(s - frobenius_cost(exact, raw)))
    elapsed = time.perf_counter() - t0
    ok = herm <= 1e-10 and tr <= 1e-10 and min_eig >= -1e-9 and gap <= 1e-6 and elapsed < 120
    _report(capsys, 5, "physicalization on 100 perturbed matrices", ok,
            f"herm {herm:.1e}, trace {tr:.1e}, min eig {min_eig:.1e}, S - S_clip <= {gap:.2e}, "
            f"|S - S_exact| <= {exact_gap:.1e}, {elapsed:.1f}s")


def test_criterion_6_fidelity(capsys):
    rho = random_density(7, seed=3)
    same = fidelity(rho, rho)
    orth = fidelity(eigenstate(0, 2).density(), eigenstate(1, 2).density())
    half = fidelity(eigenstate(0, 2).density(), DensityMatrix(np.eye(2) / 2, physical=True))
    asym = 0.0
    for k in range(50):
        a = random_density(13, rank=1 + k % 13, seed=k)
        b = random_density(13, rank=1 + (7 * k) % 13, seed=500 + k)
        asym = max(asym, abs(fidelity(a, b) - fidelity(b, a)))
    ok = abs(same - 1) <= 1e-10 and abs(orth) <= 1e-12 and abs(half - 0.5) <= 1e-12 and asym <= 1e-10
    _report(capsys, 6, "fidelity function", ok,
            f"F(r,r)={same:.12f}, F(orth)={orth:.1e}, F(|0>,I/2)={half:.12f}, max asym {asym:.1e}")


def test_criterion_7_wigner(capsys):
    t0 = time.perf_counter()
    vac = wigner_at(eigenstate(0, 13).density(), 0.0, 0.0)
    integrals = [wigner(r).integral() for r in benchmark_states().values()]
    cat_min = wigner(truncated_cat(2.0).density()).values.min()
    fringe = fringe_contrast(rho_m1())
    elapsed = time.perf_counter() - t0
    worst_int = max(abs(v - 1) for v in integrals)
    ok = (abs(vac * math.pi - 1) <= 0.02 and worst_int <= 1e-2 and cat_min < 0 and fringe < 0.1 and elapsed < 60)
    _report(capsys, 7, "Wigner function", ok,
            f"pi*W_vac(0,0)={vac * math.pi:.6f}, max |int-1|={worst_int:.1e}, cat min {cat_min:.4f}, "
            f"rho_m1 fringe contrast {fringe:.1e}, {elapsed:.1f}s")


def test_criterion_8_calibration(capsys, geometry):
    t0 = time.perf_counter()
    clean = intensity_image(eigenstate(0, 1).density(), geometry)
    errs = [abs(fit_waist(apply_noise(clean, NoiseModel(photon_budget=1e6), seed=s)).sigma - geometry.sigma)
            for s in range(10)]
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-3 and elapsed < 60
    _report(capsys, 8, "waist calibration at 1e6 photons", ok, f"max |sigma error| {max(errs):.2e} mm, {elapsed:.1f}s")
