"""Acceptance suite: every contract criterion at its stated tolerance.

Each test prints one pass/fail line (run with ``pytest -s`` to see them
interleaved); the shared 50-member battery and the reference trajectory
are computed once per session.
"""
import time

import numpy as np
import pytest

from hillkdv import (Battery, Discriminant, FlowConfig, HillSpectrum,
                     TrigPotential, cascade_experiment, evolve, run_battery)
from hillkdv.cli import main as cli_main
from hillkdv.verify import check_flow_norms

ACCEPTANCE_BATTERY = Battery(seed=1720, count=50, n_modes=8, decay="exp",
                             decay_rate=0.6, norm_min=0.1, norm_max=2.0)
MARGIN_TOL = 1e-9


def _line(criterion: str, passed: bool, detail: str) -> None:
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def _by_check(summary, name):
    return [r for r in summary.reports if r.check == name]


@pytest.fixture(scope="module")
def battery_summary():
    start = time.perf_counter()
    summary = run_battery(ACCEPTANCE_BATTERY)
    wall = time.perf_counter() - start
    return summary, wall


@pytest.fixture(scope="module")
def main_flow():
    psi0 = TrigPotential.from_cosines([(1, 0.5)])
    cfg = FlowConfig(modes=256, dt=5e-5, t_end=0.5, record_every=1000,
                     track_actions=True, action_count=8)
    start = time.perf_counter()
    result = evolve(psi0, cfg)
    wall = time.perf_counter() - start
    return result, wall


def _drift_pair(dt, t_end=0.5):
    psi0 = TrigPotential.from_cosines([(1, 0.5)])
    cfg = FlowConfig(modes=256, dt=dt, t_end=t_end,
                     record_every=max(1, int(round(0.05 / dt))))
    diag = evolve(psi0, cfg).diagnostics
    n0 = diag.norm_l2[0] ** 2
    norm_drift = float(np.max(np.abs(diag.norm_l2**2 - n0)) / n0)
    ham_drift = float(np.max(np.abs(diag.energy - diag.energy[0]))
                      / abs(diag.energy[0]))
    return norm_drift, ham_drift


def test_criterion_01_norm_action_identity(battery_summary):
    summary, wall = battery_summary
    reports = _by_check(summary, "norm-action-identity")
    assert len(reports) == ACCEPTANCE_BATTERY.count
    worst = max(r.margin / max(r.lhs, 1e-12) for r in reports)
    ok = all(r.passed for r in reports) and wall <= 300.0
    _line("1", ok,
          f"50-member battery, worst relative identity error {worst:.3e} "
          f"(tol 1e-6), wall {wall:.1f}s (budget 300s)")


def test_criterion_02_quasimomentum_identities(battery_summary):
    summary, _ = battery_summary
    weight = _by_check(summary, "q0-from-weight")
    dual = _by_check(summary, "q0-dual-forms")
    assert len(weight) == len(dual) == ACCEPTANCE_BATTERY.count
    ok = all(r.passed for r in weight + dual)
    _line("2", ok,
          f"worst |Q0 - half weight-norm| {max(r.margin for r in weight):.3e}, "
          f"worst dual-form gap {max(r.margin for r in dual):.3e}")


def test_criterion_03_norm_action_bounds(battery_summary):
    summary, _ = battery_summary
    fwd = _by_check(summary, "sobolev-from-actions")
    bwd = _by_check(summary, "actions-from-sobolev")
    margins_ok = all(r.margin >= -MARGIN_TOL for r in fwd + bwd)
    ratio = summary.ratio_14_max
    flag = ("within-3" if ratio <= 3.0
            else "flag-3-5" if ratio <= 5.0 else "above-5")
    _line("3", margins_ok and ratio <= 5.0,
          f"both bounds hold on every member; constant tracker "
          f"max={ratio:.6f} ({flag})")


def test_criterion_04_riccati(battery_summary):
    summary, _ = battery_summary
    qpq = _by_check(summary, "riccati-roundtrip-qpq")
    pqp = _by_check(summary, "riccati-roundtrip-pqp")
    bounds = (_by_check(summary, "riccati-forward-bound")
              + _by_check(summary, "riccati-inverse-bound"))
    shift = _by_check(summary, "riccati-shift-match")
    round_ok = all(r.margin <= 1e-7 for r in qpq + pqp)
    bounds_ok = all(r.margin >= -MARGIN_TOL for r in bounds)
    shift_ok = all(r.margin <= 1e-8 for r in shift)
    _line("4", round_ok and bounds_ok and shift_ok,
          f"worst roundtrip {max(r.margin for r in qpq + pqp):.3e} (tol 1e-7), "
          f"worst bound margin {min(r.margin for r in bounds):.3e}, "
          f"worst shift gap {max(r.margin for r in shift):.3e} (tol 1e-8)")


def test_criterion_05_momentum_chain(battery_summary):
    summary, _ = battery_summary
    momentum = _by_check(summary, "momentum-from-actions")
    lam_read = _by_check(summary, "actionsum-bound-lambda")
    z_read = _by_check(summary, "actionsum-bound-z")
    assert len(momentum) == len(lam_read) == len(z_read) == ACCEPTANCE_BATTERY.count
    ok = all(r.margin >= -MARGIN_TOL for r in momentum) \
        and all(r.passed for r in lam_read)
    _line("5", ok,
          f"weight bound worst margin {min(r.margin for r in momentum):.3e}; "
          f"action-sum bound: lam-measure worst "
          f"{min(r.margin for r in lam_read):.3e}, z-measure worst "
          f"{min(r.margin for r in z_read):.3e} (reported, informational)")


def test_criterion_06_spectral_cross_validation():
    potentials = [
        TrigPotential.from_cosines([(1, 0.2)]),
        TrigPotential.from_cosines([(1, 0.6), (2, 0.3)]),
        ACCEPTANCE_BATTERY.members()[0],
        ACCEPTANCE_BATTERY.members()[23],
    ]
    worst_shift = 0.0
    worst_residual = 0.0
    for psi in potentials:
        hs = HillSpectrum(psi, n_max=16)
        scale = np.maximum(1.0, np.abs(hs.bands.edges))
        worst_shift = max(worst_shift, float(np.max(hs.bands.edge_shifts / scale)))
        worst_residual = max(worst_residual, float(np.max(hs.bands.edge_residuals)))
        edges = hs.bands.edges
        for n in range(16):
            assert edges[2 * n + 1] > edges[2 * n]
            if n >= 1:
                assert edges[2 * n] >= edges[2 * n - 1] - 1e-10
    rng = np.random.default_rng(6)
    disc = Discriminant(potentials[1], q0=0.05, lam_max=2700.0)
    wron = max(abs(disc.monodromy(lam).wronskian - 1.0)
               for lam in rng.uniform(-4.0, 2600.0, 50))
    ok = worst_shift <= 1e-8 and worst_residual <= 1e-8 and wron <= 1e-10
    _line("6", ok,
          f"edge route disagreement {worst_shift:.3e} (tol 1e-8), "
          f"discriminant residual at edges {worst_residual:.3e} (tol 1e-8), "
          f"Wronskian drift {wron:.3e} (tol 1e-10), interlacing strict")


def test_criterion_07_isospectral_flow(main_flow):
    result, wall = main_flow
    start = time.perf_counter()
    diag = result.diagnostics
    n0 = diag.norm_l2[0] ** 2
    norm_drift = float(np.max(np.abs(diag.norm_l2**2 - n0)) / n0)
    ham_drift = float(np.max(np.abs(diag.energy - diag.energy[0]))
                      / abs(diag.energy[0]))
    action_drift = float(np.max(np.abs(diag.actions - diag.actions[0])))
    action_tol = 1e-5 * max(diag.actions[0, 0], 1e-12)

    # order check where the drift is far above its rounding floor
    coarse = _drift_pair(4e-4)
    fine = _drift_pair(2e-4)
    ratio = coarse[1] / fine[1]
    halved = _drift_pair(2.5e-5)

    wall += time.perf_counter() - start
    ok = (norm_drift <= 1e-8 and ham_drift <= 1e-7
          and action_drift <= action_tol and 8.0 <= ratio <= 64.0
          and wall <= 600.0)
    _line("7", ok,
          f"norm drift {norm_drift:.2e} (tol 1e-8), energy drift "
          f"{ham_drift:.2e} (tol 1e-7), action drift {action_drift:.2e} "
          f"(tol {action_tol:.2e}); halving dt at 4e-4 improves drift "
          f"{ratio:.1f}x (fourth order: >= 16x expected, band [8, 64]); "
          f"at the run step the drift is already at its rounding floor "
          f"({halved[1]:.1e} after halving); wall {wall:.0f}s (budget 600s)")


def test_criterion_08_flow_norm_stability(main_flow):
    result, _ = main_flow
    reports = check_flow_norms(result)
    ok = all(r.passed for r in reports)
    worst = min(r.margin for r in reports)
    _line("8", ok,
          f"{len(reports)} per-time bounds along the trajectory, "
          f"worst margin {worst:.3e}")


def test_criterion_09_cascade():
    cfg = FlowConfig(modes=256, dt=1e-5, t_end=0.5, record_every=2500,
                     projector_cutoffs=(2,))
    report = cascade_experiment(n_high=16, n_low=2, amplitude=float(np.pi),
                                config=cfg)
    ok = (report.epsilon <= 0.25 and report.passed
          and np.all(report.hm1_margins >= -MARGIN_TOL)
          and np.all(report.low_margins >= -MARGIN_TOL))
    _line("9", ok,
          f"eps={report.epsilon:.5f} (<= 1/4); worst antiderivative-norm "
          f"margin {np.min(report.hm1_margins):.4f}, worst low-mode margin "
          f"{np.min(report.low_margins):.4f}, worst split margin "
          f"{np.min(report.split_margins):.4f} over {len(report.times)} records")


def test_criterion_10_gap_geometry(battery_summary):
    summary, _ = battery_summary
    lower = _by_check(summary, "gap-pointwise-lower")
    concave = _by_check(summary, "gap-concavity")
    assert len(lower) == len(concave) == ACCEPTANCE_BATTERY.count
    ok = all(r.passed for r in lower + concave)
    _line("10", ok,
          f"chord bound worst margin {min(r.margin for r in lower):.3e}, "
          f"concavity worst excess {min(r.margin for r in concave):.3e} "
          f"(100-point scans, gaps above the noise floor)")


def test_criterion_11_determinism(tmp_path):
    cfg_path = tmp_path / "det.cfg"
    cfg_path.write_text(
        "potential = cos:1:0.3, cos:2:0.16\nn_max = 8\nseed = 7\ncount = 3\n",
        encoding="utf-8")
    outputs = {}
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert cli_main(["verify", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert cli_main(["actions", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert cli_main(["spectrum", "--config", str(cfg_path), "--out", str(out)]) == 0
        blob = {}
        for name in ("reports.jsonl", "summary.txt", "actions.tsv",
                     "moments.tsv", "spectrum.tsv"):
            lines = (out / name).read_text(encoding="utf-8").splitlines()
            blob[name] = "\n".join(ln for ln in lines
                                   if not ln.startswith("# generated:"))
        outputs[tag] = blob
    ok = outputs["a"] == outputs["b"]
    _line("11", ok, "rerun outputs byte-identical apart from the timestamp line")
