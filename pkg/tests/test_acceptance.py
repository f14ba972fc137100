"""Acceptance criteria 1-11, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line that the terminal
summary prints at the end of the run.
"""
import csv
import math
import warnings

import numpy as np
import pytest
from scipy import integrate, special

from conftest import ACCEPTANCE_LINES
from flosfading import aging, flos, metrics, prony, sampler
from flosfading.cli import main
from flosfading.flos import FLoSParams
from oracles import cdf_by_quadrature, hoyt_pdf, nakagami_cdf, rayleigh_cdf, rician_shadowed_pdf

K13 = 10 ** 1.3
LATTICE = [
    FLoSParams(1.0, K, k, lam=lam)
    for k in (1, 2, 3, 5)
    for lam in (0.0, 1.0, 5.0)
    for K in (0.0, 10 ** 0.3, 10.0)
]


def db(x):
    return 10 ** (x / 10)


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _grid50(p):
    return np.linspace(0.02, 5.0, 50) * p.gamma_bar


def test_criterion_01_table1_closure():
    x = np.linspace(0.1, 10.0, 40)
    errs = {}
    errs["rayleigh"] = np.max(np.abs(flos.cdf(flos.from_special(flos.Rayleigh(), 1.0), x) - rayleigh_cdf(1.0, x)))
    hoyt = flos.from_special(flos.Hoyt(0.5), 1.0)
    errs["hoyt"] = max(abs(flos.cdf(hoyt, v) - cdf_by_quadrature(lambda s: hoyt_pdf(0.5, 1.0, s), v)) for v in x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        naka = flos.from_special(flos.NakagamiM(2.0), 1.0)
    errs["nakagami"] = np.max(np.abs(flos.cdf(naka, x) - nakagami_cdf(2.0, 1.0, x)))
    rs = flos.from_special(flos.RicianShadowed(10.0, 2.0), 1.0)
    errs["rician_shadowed"] = max(
        abs(flos.cdf(rs, v) - cdf_by_quadrature(lambda s: rician_shadowed_pdf(10.0, 2.0, 1.0, s), v)) for v in x
    )
    worst = max(errs.values())
    record(1, worst <= 1e-6, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


def test_criterion_02_dual_pdf_paths():
    worst = 0.0
    for p in LATTICE:
        x = _grid50(p)
        worst = max(worst, float(np.max(np.abs(flos.pdf_psi2(p, x) / flos.pdf_int_k(p, x) - 1.0))))
    record(2, worst <= 1e-6, f"max rel diff {worst:.1e} over {len(LATTICE)} parameter sets")


def test_criterion_03_mixture_closure():
    wsum, rel = 0.0, 0.0
    for p in LATTICE:
        comps = flos.mixture_decompose(p)
        wsum = max(wsum, abs(sum(c.weight for c in comps) - 1.0))
        x = _grid50(p)
        mix = sum(c.weight * flos.kappa_mu_pdf(c.component, x) for c in comps)
        rel = max(rel, float(np.max(np.abs(mix / flos.pdf_int_k(p, x) - 1.0))))
    record(3, wsum <= 1e-12 and rel <= 1e-9, f"|sum w - 1| {wsum:.1e}, max rel diff {rel:.1e}")


def test_criterion_04_transform_consistency():
    cases = [FLoSParams(1.0, 3.0, 1.5, lam=2.0), FLoSParams(2.0, 10.0, 3, lam=5.0), FLoSParams(1.0, 0.5, 0.5)]
    mgf_err = 0.0
    for p in cases:
        for T in (0.1, 1.0, 10.0):
            q = integrate.quad(lambda v: math.exp(-T * v) * flos.pdf(p, v), 0, np.inf, epsabs=1e-12, limit=200)[0]
            mgf_err = max(mgf_err, abs(flos.mgf(p, -T) - q))
    h, der_err = 1e-4, 0.0
    for p in cases:
        x = np.linspace(0.2, 4.0, 12) * p.gamma_bar
        slope = (flos.cdf(p, x + h) - flos.cdf(p, x - h)) / (2 * h)
        der_err = max(der_err, float(np.max(np.abs(slope - flos.pdf(p, x)))))
    record(4, mgf_err <= 1e-6 and der_err <= 1e-5, f"mgf vs quad {mgf_err:.1e}, dF/dx vs pdf {der_err:.1e}")


def test_criterion_05_moments():
    rel, mean_err = 0.0, 0.0
    for p in LATTICE:
        for n in range(1, 5):
            q = integrate.quad(lambda v: v ** n * flos.pdf_int_k(p, v), 0, np.inf, epsrel=1e-11, limit=200)[0]
            rel = max(rel, abs(flos.moment(p, n) / q - 1.0))
    for p in LATTICE + [FLoSParams(3.7, 4.0, 2.5, lam=0.3), FLoSParams(0.2, 50.0, 0.5, lam=9.0)]:
        mean_err = max(mean_err, abs(flos.moment(p, 1) - p.gamma_bar) / p.gamma_bar)
    record(5, rel <= 1e-6 and mean_err <= 1e-12, f"max rel diff vs quad {rel:.1e}, mean error {mean_err:.1e}")


def test_criterion_06_monte_carlo():
    cases = [
        FLoSParams(1.0, 0.0, 1.0),
        FLoSParams(1.0, 10.0, 1.0, lam=5.0),
        FLoSParams(2.0, 3.0, 2.0),
        FLoSParams(1.0, K13, 1.5, lam=2.0),
        FLoSParams(1.0, 10.0, 5.0, lam=1.0),
        FLoSParams(0.5, 2.0, 3.0, lam=5.0),
    ]
    limit = 1.63 / 1000
    stats = []
    for i, p in enumerate(cases):
        draws = sampler.sample_snr(p, sampler.SeededStream(606, i), 1_000_000)
        grid = np.linspace(0.0, float(draws.max()), 1501)
        F = np.asarray(flos.cdf(p, grid))
        stats.append(sampler.ks_statistic(draws, lambda d: np.interp(d, grid, F)))
    record(6, max(stats) < limit, "KS " + ", ".join(f"{s:.2e}" for s in stats) + f" (< {limit:.2e})")


def test_criterion_07_outage_asymptote():
    ratios, slopes = [], []
    snr = np.array([40.0, 50.0, 60.0])
    for lam in (0.0, 5.0):
        p = FLoSParams(db(50), K13, 1.5, lam=lam)
        ratios.append(metrics.outage_probability(p, 1.0) / metrics.outage_asymptotic(p, 1.0))
        op = [metrics.outage_probability(FLoSParams(db(s), K13, 1.5, lam=lam), 1.0) for s in snr]
        slopes.append(np.polyfit(snr / 10, np.log10(op), 1)[0])
    ok = all(0.98 <= r <= 1.02 for r in ratios) and all(abs(s + 1) <= 0.02 for s in slopes)
    record(7, ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios) + "; slopes " + ", ".join(f"{s:.4f}" for s in slopes))


def test_criterion_08_ergodic_capacity():
    exact = math.e * special.exp1(1.0) / math.log(2.0)
    ray = FLoSParams(1.0, 0.0, 1.0)
    ray_err = max(abs(metrics.ergodic_capacity(ray).value_bps_hz - exact),
                  abs(metrics.ergodic_capacity_reference(ray).value_bps_hz - exact))
    diff, jensen_ok, gaps = 0.0, True, {}
    for k in (0.5, 2, 8):
        for s in (0, 10, 20, 30):
            p = FLoSParams(db(s), K13, k)
            pr = metrics.ergodic_capacity(p)
            ref = metrics.ergodic_capacity_reference(p)
            diff = max(diff, abs(pr.value_bps_hz - ref.value_bps_hz))
            jensen_ok &= pr.value_bps_hz <= pr.awgn_bound + 1e-9 and ref.value_bps_hz <= ref.awgn_bound + 1e-9
            if s == 20:
                gaps[k] = pr.awgn_bound - pr.value_bps_hz
    gap_ok = gaps[0.5] > gaps[2] > gaps[8]
    ok = ray_err <= 2e-3 and diff <= 1e-3 and jensen_ok and gap_ok
    record(8, ok, f"Rayleigh error {ray_err:.1e}, prony vs reference {diff:.1e}, "
                  f"AWGN gaps at 20 dB {gaps[0.5]:.3f} > {gaps[2]:.3f} > {gaps[8]:.3f}")


def test_criterion_09_prony():
    h = 0.02
    x = h * np.arange(161)
    c, T = prony.prony_fit(1.5 * np.exp(-0.4 * x) - 0.7 * np.exp(-2.1 * x), h, 2)
    order = np.argsort(T.real)
    perr = float(np.max(np.abs(np.r_[c[order] - [1.5, -0.7], T[order] - [0.4, 2.1]])))
    fit = prony.fit_log1p()
    grid = np.linspace(0.0, 1024.0, 500_001)
    sup = float(np.max(np.abs(fit.eval(grid) - np.log1p(grid))))
    record(9, perr <= 1e-8 and sup <= 1e-4, f"synthetic parameter error {perr:.1e}, ln(1+x) sup error {sup:.1e}")


def test_criterion_10_aging():
    cfg = aging.AgingConfig(4, db(10), 0.01, db(10), 1.0)
    n1 = aging.first_zero_index(cfg)
    zs = []
    for i, n in enumerate((0, round(n1 / 2), round(n1), round(2 * n1))):
        rho = aging.rho_at(cfg, n)
        p_sim, se = aging.simulate_coverage(cfg, rho, sampler.SeededStream(1010, i), 1_000_000)
        zs.append((aging.coverage_at(cfg, rho) - p_sim) / max(se, 1e-12))
    slopes = []
    for N in (1, 4):
        shape = aging.aging_snr_params(0.7, aging.AgingConfig(N, db(10), 0.01, 1.0, 1.0))
        op = [metrics.outage_probability(FLoSParams(db(s), shape.K, shape.k, lam=shape.lam, omega=shape.omega), 1.0)
              for s in (50, 60)]
        slopes.append(math.log10(op[1] / op[0]))
    ok = all(abs(z) <= 3 for z in zs) and all(abs(s + 1) <= 0.02 for s in slopes)
    record(10, ok, f"N1 = {n1:.2f}, z-scores " + ", ".join(f"{z:.2f}" for z in zs)
           + "; slopes " + ", ".join(f"{s:.4f}" for s in slopes))


def _read(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, np.array([[float(v) for v in r] for r in reader])


def _unimodal(y):
    # a single sign change of the slope (or none)
    d = np.sign(np.diff(y))
    d = d[d != 0]
    return int(np.sum(d[1:] != d[:-1])) <= 1


def test_criterion_11_figure_shapes(tmp_path):
    out = {}
    for fig in ("fig2", "fig3", "fig4", "fig5", "fig6"):
        path = tmp_path / f"{fig}.csv"
        cmd = {"fig2": "pdf", "fig3": "pdf", "fig4": "op", "fig5": "ec", "fig6": "aging"}[fig]
        assert main([cmd, "--preset", fig, "-o", str(path)]) == 0
        out[fig] = _read(path)
    checks = {}
    h, d = out["fig2"]
    checks["fig2 unimodal"] = all(_unimodal(d[:, j]) for j in range(1, d.shape[1]))
    h, d = out["fig3"]
    shifts = True
    for g in ("1", "2"):
        cols = [h.index(f"pdf_gamma_bar={g}_lambda={lam}") for lam in (0, 2, 5, 10)]
        peaks = [d[np.argmax(d[:, c]), 0] for c in cols]
        shifts &= all(a < b for a, b in zip(peaks[:-1], peaks[1:]))
    checks["fig3 peak moves right with lambda"] = shifts
    h, d = out["fig4"]
    ops = [d[:, h.index(f"op_lambda={lam}")] for lam in (0, 2, 5)]
    checks["fig4 OP ordered by lambda"] = bool(np.all(ops[0] >= ops[1]) and np.all(ops[1] >= ops[2]))
    checks["fig4 OP decreasing in SNR"] = all(bool(np.all(np.diff(o) < 0)) for o in ops)
    h, d = out["fig5"]
    ecs = [d[:, h.index(f"ec_k={k}")] for k in ("0.5", "2", "8")]
    checks["fig5 EC increasing and below AWGN"] = all(
        bool(np.all(np.diff(e) > 0) and np.all(e <= d[:, h.index("awgn")] + 1e-9)) for e in ecs
    )
    h, d = out["fig6"]
    trend = True
    for j in range(1, d.shape[1]):
        pc = d[:, j]
        trend &= pc[0] > pc[-1] and np.polyfit(d[:, 0], pc, 1)[0] < 0
    checks["fig6 coverage trend downward"] = bool(trend)
    failed = [k for k, v in checks.items() if not v]
    record(11, not failed, "all shape checks hold" if not failed else "failed: " + ", ".join(failed))
