"""Acceptance suite: one test per criterion, each printing a PASS line.

Criterion 8 runs the full desk-scale scenario (36,000 antennas, 50 users,
10 user drops over the default sweep grid); expect a few minutes.
"""
import json
import subprocess
import sys

import numpy as np
import pytest

from lisim import costmodel, equalizers, geometry, harness, numerics, pipeline
from lisim.equalizers import IICState, PanelEqualizer

import oracles

LAMBDA = 0.075

FIG5_CONFIG = dict(wavelength=LAMBDA, surface_height=2.25, surface_width=22.5,
                   panel_side=2.25, num_users=50, snr=1.0,
                   service_depth=40.0, service_width=45.0,
                   service_standoff=0.5, rng_seed=1, outputs_per_panel=16)

FIG5_GRID = dict(panel_sides=[0.375, 0.75, 1.125, 2.25],
                 np_values=[1, 2, 4, 8, 12, 16, 24, 32, 50],
                 algorithms=["rmf", "iic"], n_drops=10)

TARGET_RATE = 610.0


def report(num, text):
    print(f"\n[acceptance {num:>2}] PASS: {text}", flush=True)


@pytest.fixture(scope="module")
def fig5_rows():
    spec = harness.SweepSpec(base=geometry.ScenarioConfig(**FIG5_CONFIG),
                             **FIG5_GRID)
    rows, failures = harness.run_sweep(spec)
    assert not failures, f"sweep cells failed: {failures}"
    return rows


def test_criterion_01_backplane_estimate():
    proc = subprocess.run(
        [sys.executable, "-m", "lisim.cli", "estimate-backplane",
         "--antennas", "28500", "--bits", "8", "--bandwidth", "1e8"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    rate = json.loads(proc.stdout)["raw_backplane_bps"]
    assert rate == pytest.approx(45.6e12)
    assert abs(rate - 45.5e12) / 45.5e12 < 0.01
    report(1, f"raw backplane rate {rate / 1e12:.1f} Tbps, within 1% of 45.5 Tbps")


def test_criterion_02_power_harvest():
    frac = geometry.captured_power_fraction((0.0, 0.0, 1.0), 40.0, 40.0, LAMBDA)
    lo = oracles.disk_capture_fraction(1.0, 20.0)
    hi = oracles.disk_capture_fraction(1.0, 20.0 * np.sqrt(2))
    assert lo - 0.02 <= frac <= hi + 0.02
    report(2, f"captured fraction {frac:.4f} within disk bounds "
              f"[{lo:.4f} - 0.02, {hi:.4f} + 0.02]")


def test_criterion_03_rmf_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        K = int(rng.integers(2, 9))
        P = int(rng.integers(1, 5))
        Mp = int(rng.integers(K, 256 // P + 1))
        Hs = [oracles.random_complex(rng, Mp, K) for _ in range(P)]
        eqs = [equalizers.rmf_formulate(H, K, panel_index=i)
               for i, H in enumerate(Hs)]
        eff = pipeline.effective_channel(eqs, Hs, pipeline.COMBINE, num_users=K)
        got = pipeline.sum_rate(eff, 1.0)
        # Full-MF centralized: W = H^H gives the same whitened observation.
        H_full = np.vstack(Hs)
        W = equalizers.baseline_centralized(H_full, "MF")
        ref = numerics.logdet_hermitian_pd(
            np.eye(K) + (W @ H_full).conj().T @ np.linalg.solve(
                W @ W.conj().T, W @ H_full))
        rel = abs(got - ref) / abs(ref)
        worst = max(worst, rel)
        assert rel <= 1e-9
    report(3, f"RMF Np=K combine equals centralized MF rate; worst rel err {worst:.2e}")


def test_criterion_04_iic_completeness():
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(20):
        K = int(rng.integers(2, 9))
        M = int(rng.integers(K, 257))
        H = oracles.random_complex(rng, M, K)
        eqs, _ = equalizers.iic_chain([H], K)
        eff = pipeline.effective_channel(eqs, [H], pipeline.BYPASS)
        got = pipeline.sum_rate(eff, 1.0)
        ref = pipeline.centralized_rate(H, 1.0)
        rel = abs(got - ref) / abs(ref)
        worst = max(worst, rel)
        assert rel <= 1e-6
    report(4, f"single-panel IIC with Np=K reaches the centralized optimum; "
              f"worst rel err {worst:.2e}")


def test_criterion_05_iic_step_correctness():
    # Closed-form single-user case.
    eq, state = equalizers.iic_formulate_step(
        np.array([[3.0], [4.0]], dtype=complex),
        IICState(Z=np.array([[1.0 + 0j]])), 1)
    np.testing.assert_allclose(eq.W, [[0.6, 0.8]], atol=1e-10)
    np.testing.assert_allclose(state.Z, [[26.0]], atol=1e-10)
    # Independent SVD-oracle recomputation on random instances.
    rng = np.random.default_rng(99)
    for _ in range(20):
        Mp = int(rng.integers(3, 9))
        K = int(rng.integers(2, 6))
        Np = int(rng.integers(1, min(Mp, K) + 1))
        H = oracles.random_complex(rng, Mp, K)
        G = oracles.random_complex(rng, K, K)
        Z = G @ G.conj().T + np.eye(K)
        eq, state = equalizers.iic_formulate_step(H, IICState(Z=Z), Np)
        W_ref, Z_ref = oracles.iic_step_reference(H, Z, Np)
        np.testing.assert_allclose(eq.W, W_ref, atol=1e-8)
        np.testing.assert_allclose(state.Z, Z_ref, atol=1e-8)
    report(5, "IIC step matches the independent SVD-oracle recomputation "
              "(incl. W=[0.6,0.8], Z 1->26 closed form)")


def test_criterion_06_complexity_formulas():
    assert costmodel.iic_macs_per_formulation(100, 50, 16) == 6_122_500
    rng = np.random.default_rng(3)
    for _ in range(100):
        K = int(rng.integers(1, 300))
        Mp = int(rng.integers(1, 10000))
        Np = int(rng.integers(1, K + 1))
        per_step = (17 * K ** 3 + (Mp + 1) * K ** 2
                    + 4 * Mp ** 2 * K + 13 * K ** 3
                    + Mp * K * Np + Np * K ** 2)
        assert costmodel.iic_macs_per_formulation(Mp, K, Np) == per_step
    report(6, "IIC formulation cost = 6,122,500 MACs at (K=50, Mp=100, Np=16); "
              "grouped form identical to per-step sum on 100 random tuples")


def test_criterion_07_latency_formulas():
    t_f, t_p = 2e-6, 0.7e-6
    assert costmodel.latency_filtering(256, t_f, t_p) == pytest.approx(t_f + 4 * t_p)
    t_c, t_pp = 3e-6, 1.1e-6
    for P in range(1, 65):
        assert costmodel.latency_form_iic(P, t_c, t_pp) == \
            pytest.approx(P * t_c + (P - 1) * t_pp)
    report(7, "latency formulas exact: T_Filter + 4 T_PSU at P=256; "
              "P T_compute + (P-1) T_pp for P in 1..64")


def test_criterion_08a_peak_rate(fig5_rows):
    best = max(r.mean_rate_bps_hz for r in fig5_rows)
    assert best >= TARGET_RATE
    report(8, f"(a) peak mean sum rate {best:.1f} bps/Hz >= {TARGET_RATE} bps/Hz")


def test_criterion_08b_iic_dominates_rmf(fig5_rows):
    by_key = {(r.algorithm, r.ap_m2, r.np): r.mean_rate_bps_hz for r in fig5_rows}
    margin = min(by_key[("iic", ap, n)] - 0.99 * by_key[("rmf", ap, n)]
                 for (a, ap, n) in by_key if a == "iic")
    assert margin >= 0
    report(8, "(b) IIC mean rate >= RMF mean rate - 1% at every matched (Ap, Np)")


def test_criterion_08c_iso_rate_tradeoff(fig5_rows):
    points, _ = harness.iso_rate_points(fig5_rows, TARGET_RATE)
    assert len(points) >= 3
    for algo in ("rmf", "iic"):
        pts = sorted((p for p in points if p.algorithm == algo),
                     key=lambda p: p.ap_m2)
        for small, large in zip(pts, pts[1:]):
            assert small.r_global_bps_per_m2 >= large.r_global_bps_per_m2
    report(8, f"(c) {len(points)} iso-rate design points at {TARGET_RATE} bps/Hz; "
              f"smaller panels need more global bandwidth")


def test_criterion_09_pipeline_algebra():
    rng = np.random.default_rng(77)
    # Tree/flat aggregation equivalence, 100+ cases across modes and fan-ins.
    for case in range(120):
        fan_in = int(rng.integers(2, 6))
        P = int(rng.integers(1, 60))
        K = 5
        mode = pipeline.COMBINE if case % 2 == 0 else pipeline.BYPASS
        blocks = []
        for _ in range(P):
            tags = tuple(rng.choice(K, size=2, replace=False).tolist())
            blocks.append(pipeline.FilteredBlock(
                values=oracles.random_complex(rng, 2, 1)[:, 0],
                user_tags=tags if mode == pipeline.COMBINE else None))
        tree = pipeline.PsuTree.build(P, fan_in=fan_in, mode=mode)
        got = pipeline.aggregate_tree(tree, blocks, num_users=K)
        flat = pipeline.psu_process(blocks, mode, num_users=K)
        np.testing.assert_allclose(got.values, flat.values, atol=1e-12)

    # Rate monotonicity in Np, both algorithms.
    checked = 0
    while checked < 100:
        P = int(rng.integers(1, 4))
        K = int(rng.integers(2, 6))
        Mp = int(rng.integers(K, 10))
        Hs = [oracles.random_complex(rng, Mp, K) for _ in range(P)]
        prev = {"rmf": -1.0, "iic": -1.0}
        for Np in range(1, K + 1):
            for algo in ("rmf", "iic"):
                rate = harness.evaluate_rate(algo, Hs, Np, 1.0)
                assert rate >= prev[algo] - 1e-9
                prev[algo] = rate
                checked += 1

    # Unitary invariance of the bypass sum rate.
    for _ in range(100):
        P = int(rng.integers(1, 4))
        K = int(rng.integers(2, 6))
        Np = int(rng.integers(1, K + 1))
        Hs = [oracles.random_complex(rng, K + 3, K) for _ in range(P)]
        eqs, _ = equalizers.iic_chain(Hs, Np)
        base = pipeline.sum_rate(pipeline.effective_channel(eqs, Hs, pipeline.BYPASS), 1.0)
        j = int(rng.integers(0, P))
        Q, _ = np.linalg.qr(oracles.random_complex(rng, Np, Np))
        rotated = [PanelEqualizer(W=Q @ eq.W, selected_users=None, panel_index=eq.panel_index)
                   if i == j else eq for i, eq in enumerate(eqs)]
        rot = pipeline.sum_rate(pipeline.effective_channel(rotated, Hs, pipeline.BYPASS), 1.0)
        assert rot == pytest.approx(base, rel=1e-9)

    # Z growth stays PSD along random chains.
    for _ in range(100):
        P = int(rng.integers(1, 5))
        K = int(rng.integers(2, 6))
        Np = int(rng.integers(1, K + 1))
        state = IICState.identity(K)
        for i in range(P):
            H = oracles.random_complex(rng, K + 2, K)
            _, new_state = equalizers.iic_formulate_step(H, state, Np, panel_index=i)
            assert np.linalg.eigvalsh(new_state.Z - state.Z).min() >= -1e-9
            state = new_state
    report(9, "tree/flat equivalence, Np rate monotonicity, unitary invariance, "
              "and Z-growth PSD: 100+ randomized cases each, zero failures")


def test_criterion_10_determinism_byte_identical_csv(tmp_path):
    cfg = dict(wavelength=LAMBDA, surface_height=0.75, surface_width=1.5,
               panel_side=0.375, num_users=6, outputs_per_panel=2,
               service_depth=8.0, service_width=4.0, service_standoff=0.5,
               rng_seed=123)
    config_path = tmp_path / "cfg.json"
    config_path.write_text(json.dumps(cfg))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "panel_sides": [0.375, 0.75], "np_values": [1, 2, 4, 6],
        "algorithms": ["rmf", "iic"], "n_drops": 3}))
    contents = []
    for name in ("run1.csv", "run2.csv"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "lisim.cli", "sweep",
             "--config", str(config_path), "--spec", str(spec_path),
             "--out", str(out), "--no-plot"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        contents.append(out.read_bytes())
    assert contents[0] == contents[1]
    report(10, "two CLI sweep runs with identical config+seed produced "
               "byte-identical CSVs")
