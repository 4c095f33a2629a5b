"""Acceptance criteria 1-8, one printed PASS/FAIL line each.

Tolerances are fixed by the criteria; nothing here is tuned to the results.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from sideways import harness as H
from sideways.cauchy_harmonic import CauchyData, RegParams, regularize
from sideways.forward_solver import Problem1Config, build_psi, picard_solve
from sideways.grid_spectral import (
    Grid1D,
    Grid2D,
    GridFunction,
    fft_forward,
    forward_transform,
    inverse_transform,
    l2_norm,
    l2_norm_spectral,
    sup_norm,
    truncate_spectrum,
)
from sideways.kernels import hat_F, hat_L, hat_M, kernel_G, kernel_N, log_L, m_kernel, poisson_F
from sideways.nonlinear_cauchy import CutoffParams, WField, apply_T, band_mask, strip_norm

STRIP = H.WINDOW_STRIP
EXTERIOR = H.WINDOW_EXTERIOR


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, t0):
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\nCRITERION {number}: {status} | {detail} | runtime {time.perf_counter() - t0:.1f}s")

    return emit


def _fourier_errors(X, n):
    g = Grid1D(X, n)
    x, z = g.nodes, g.frequencies
    band = np.abs(z) <= 10
    cases = {
        "F_1": (poisson_F(1.0, x), hat_F(1.0, z)),
        "L_(0.3,0.7)": (log_L(0.3, 0.7, x), hat_L(0.3, 0.7, z)),
        "M_(0.5,1)": (m_kernel(0.5, x), hat_M(0.5, z)),
    }
    return {k: float(np.max(np.abs(forward_transform(GridFunction(g, f)).values - exact)[band])) for k, (f, exact) in cases.items()}


def test_criterion_1_fourier_oracles(report):
    t0 = time.perf_counter()
    base = _fourier_errors(40.0, 4096)
    doubled = _fourier_errors(80.0, 8192)  # N doubles at fixed spacing
    same_x = _fourier_errors(40.0, 8192)  # N doubles at fixed width (diagnostic)
    within = all(v <= 2e-3 for v in base.values())
    decreasing = all(doubled[k] < base[k] for k in base)
    runtime = time.perf_counter() - t0
    ok = within and decreasing and runtime < 10
    detail = "sup errors X=40,N=4096: " + ", ".join(f"{k}={v:.2e}" for k, v in base.items())
    detail += " (tol 2e-3); X=80,N=8192: " + ", ".join(f"{v:.2e}" for v in doubled.values())
    detail += "; X=40,N=8192: " + ", ".join(f"{v:.2e}" for v in same_x.values())
    report(1, ok, detail, t0)
    assert decreasing, "error must decrease when N doubles"
    assert within, f"Fourier oracle errors above 2e-3: {base}"
    assert runtime < 10


def test_criterion_2_problem1(report, problem1):
    t0 = time.perf_counter()
    cfg = Problem1Config(Grid2D(Grid1D(8.0, 256), 1.0, 9.0, 128))
    phi = GridFunction.from_callable(cfg.grid.x_grid, problem1.phi)
    u, rep = picard_solve(phi, problem1.src, cfg)
    exact = GridFunction.from_callable(cfg.grid, problem1.exact_u)
    rel = sup_norm(u - exact, *EXTERIOR) / sup_norm(exact, *EXTERIOR)
    runtime = time.perf_counter() - t0
    ok = rep.K_estimate < 1 and rel <= 0.02 and runtime < 60
    report(2, ok, f"K={rep.K_estimate:.4f}, iterations={rep.iterations}, relative sup error={rel:.4%} (tol 2%)", t0)
    assert rep.K_estimate < 1
    assert rel <= 0.02
    assert runtime < 60


def test_criterion_3_trace_rate(report, problem1):
    t0 = time.perf_counter()
    eps_list = (1e-2, 1e-3, 1e-4, 1e-5)
    seeds = range(5)
    cfg = H.StudyConfig(eps=eps_list)
    psi_ref = H.reference_psi(cfg, problem1)
    phi = GridFunction.from_callable(cfg.x_grid, problem1.phi)
    errs = []
    for eps in eps_list:
        per_seed = []
        for s in seeds:
            psi, _ = build_psi(H.inject_noise(phi, H.NoiseSpec(s, eps)), problem1.src, cfg.problem1, eps)
            per_seed.append(l2_norm(psi - psi_ref))
        errs.append(float(np.median(per_seed)))
    table = H.ErrorTable([H.ErrorRow(e, 0.0, 0.0, v, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0) for e, v in zip(eps_list, errs)])
    fit = H.fit_log_rate(table, "psi_err")
    runtime = time.perf_counter() - t0
    ok = 0.35 <= fit.slope <= 0.65 and runtime < 300
    detail = f"slope={fit.slope:.4f} (target [0.35, 0.65]); median errors " + ", ".join(f"{e:g}:{v:.3e}" for e, v in zip(eps_list, errs))
    report(3, ok, detail, t0)
    assert 0.35 <= fit.slope <= 0.65
    assert runtime < 300


def test_criterion_4_regularized_harmonic(report, problem2):
    t0 = time.perf_counter()
    cfg = H.StudyConfig()
    strip = cfg.strip_grid
    V = GridFunction.from_callable(strip, problem2.exact_v)
    norm = l2_norm(V, *STRIP)
    phi = GridFunction.from_callable(cfg.x_grid, problem2.phi)
    zero = GridFunction(cfg.x_grid, np.zeros(cfg.n))
    v_exact_data, _ = regularize(CauchyData(phi, zero), RegParams(1e-2), strip)
    rel_exact_data = l2_norm(v_exact_data - V, *STRIP) / norm
    sweep = []
    for eps in (1e-2, 1e-4, 1e-6):
        res = H.run_pipeline(cfg, eps, cfg.seed, problem2)
        sweep.append(l2_norm(res.v_eps - V, *STRIP) / norm)
    decreasing = all(a > b for a, b in zip(sweep, sweep[1:]))
    runtime = time.perf_counter() - t0
    ok = rel_exact_data <= 0.10 and decreasing and runtime < 120
    detail = f"eps=1e-2 exact data: relative L2 error={rel_exact_data:.4f} (tol 0.10); noisy sweep 1e-2,1e-4,1e-6: " + ", ".join(f"{v:.4f}" for v in sweep)
    report(4, ok, detail, t0)
    assert decreasing
    assert rel_exact_data <= 0.10
    assert runtime < 120


def test_criterion_5_contraction(report, problem2):
    t0 = time.perf_counter()
    cfg = H.StudyConfig()
    strip = cfg.strip_grid
    worst = {}
    for eps in (1e-2, 1e-4, 1e-6):
        params = CutoffParams.from_eps(eps, cfg.x_grid)
        v = H.run_pipeline(cfg, eps, cfg.seed, problem2).v_eps
        r = np.random.default_rng(2024)
        bound = 1.05 * problem2.src.k_bound * math.exp(params.alpha)
        ratios = []
        for _ in range(100):
            scale = 10 ** r.uniform(-3, 1)
            # band-limited real fields: project random real samples onto |zeta| <= alpha
            w1 = WField.from_spectrum(strip, fft_forward(scale * r.standard_normal(strip.shape), cfg.x_grid), params.alpha)
            w2 = WField.from_spectrum(strip, fft_forward(scale * r.standard_normal(strip.shape), cfg.x_grid), params.alpha)
            num = strip_norm(apply_T(w1, v, problem2.src, params).values.values - apply_T(w2, v, problem2.src, params).values.values, strip)
            ratios.append(num / strip_norm(w1.values.values - w2.values.values, strip))
        worst[eps] = (max(ratios), bound)
    runtime = time.perf_counter() - t0
    ok = all(m <= b for m, b in worst.values()) and runtime < 120
    detail = "; ".join(f"eps={e:g}: max ratio={m:.4f} <= {b:.4f}" for e, (m, b) in worst.items())
    report(5, ok, detail, t0)
    assert all(m <= b for m, b in worst.values())
    assert runtime < 120


def test_criterion_6_full_pipeline(report, problem2):
    t0 = time.perf_counter()
    cfg = H.StudyConfig()
    result = H.run_study(cfg)
    u_rel = result.table.column("u_rel")
    first = result.first
    top_zero = bool(np.all(first.w_field.values.values[-1] == 0.0))
    outside = ~band_mask(cfg.x_grid, first.w_field.alpha)
    support_ok = bool(np.all(first.w_field.spectrum.values[:, outside] == 0.0))
    non_increasing = bool(np.all(np.diff(u_rel) <= 0))
    runtime = time.perf_counter() - t0
    ok = u_rel[0] <= 0.15 and non_increasing and top_zero and support_ok and runtime < 300
    detail = "relative L2 error of u_eps at 1e-2,1e-4,1e-6: " + ", ".join(f"{v:.4f}" for v in u_rel)
    detail += f" (tol 0.15 at 1e-2); w(.,1)==0: {top_zero}; support in [-alpha, alpha]: {support_ok}"
    report(6, ok, detail, t0)
    assert top_zero and support_ok
    assert non_increasing
    assert u_rel[0] <= 0.15
    assert runtime < 300


def _invariants(n, m):
    g = Grid1D(8.0, n)
    r = np.random.default_rng(n)
    f = GridFunction(g, r.standard_normal(n))
    s = forward_transform(f)
    parseval = abs(l2_norm_spectral(s) - l2_norm(f)) / l2_norm(f)
    round_trip = float(np.max(np.abs(inverse_transform(s).values - f.values)))
    t1 = truncate_spectrum(s, 2.0)
    idem = float(np.max(np.abs(truncate_spectrum(t1, 2.0).values - t1.values)))
    x = g.nodes
    xi = r.uniform(-8, 8, n)
    y = r.uniform(1.01, 9, n)
    n_boundary = float(np.max(np.abs(kernel_N(x, y, xi, 1.0))))
    g_boundary = float(np.max(np.abs(kernel_G(x, 0.0, xi, r.uniform(0.01, 5, n)))))
    p1 = H.manufacture_problem1()
    res = H.five_point_residual(p1.exact_u, p1.src.f, g, 1.0, 3.0, m)
    return dict(parseval=parseval, round_trip=round_trip, idempotence=idem, N_eta1=n_boundary, G_eta0=g_boundary, mms=res)


def test_criterion_7_invariants(report):
    t0 = time.perf_counter()
    levels = [(64, 9), (128, 17), (256, 33)]
    results = [_invariants(n, m) for n, m in levels]
    checks = []
    for r in results[1:]:
        checks += [r["parseval"] < 1e-12, r["round_trip"] < 1e-12, r["idempotence"] == 0.0, r["N_eta1"] < 1e-15, r["G_eta0"] < 1e-15]
    halving = [results[i + 1]["mms"] / results[i]["mms"] for i in range(2)]
    checks += [h <= 0.35 for h in halving]
    runtime = time.perf_counter() - t0
    ok = all(checks) and runtime < 120
    detail = "Parseval/round-trip/idempotence/N(eta=1)/G(eta=0) at N=128,256; manufactured residual ratios " + ", ".join(f"{h:.3f}" for h in halving)
    report(7, ok, detail, t0)
    assert all(checks)
    assert runtime < 120


def test_criterion_8_determinism(report, tmp_path):
    t0 = time.perf_counter()
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = subprocess.run([sys.executable, "-m", "sideways.cli", "study", "--out", str(out), "--seed", "7"], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    files = sorted(p.name for p in outs[0].iterdir())
    same = files == sorted(p.name for p in outs[1].iterdir()) and all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    report(8, same, f"{len(files)} files compared byte-for-byte: {', '.join(files)}", t0)
    assert same
