import numpy as np
import pytest

from hillkdv import (ConfigError, FlowConfig, FlowError, TrigPotential,
                     cascade_experiment, evolve, sobolev_norm)
from hillkdv.kdv import _Etdrk4


def test_flow_config_validation():
    with pytest.raises(ConfigError):
        FlowConfig(modes=100)          # not a power of two
    with pytest.raises(ConfigError):
        FlowConfig(dt=-1e-4)
    with pytest.raises(ConfigError):
        FlowConfig(record_every=0)
    with pytest.raises(ConfigError):
        FlowConfig(modes=1024, dt=1.0)  # absurd stiff phase
    with pytest.raises(ConfigError):
        evolve(TrigPotential.from_cosines([(10, 0.1)]), FlowConfig(modes=16))


def test_zero_data_is_fixed_point():
    cfg = FlowConfig(modes=32, dt=1e-3, t_end=0.05, record_every=10)
    result = evolve(TrigPotential.zero(), cfg)
    assert np.all(result.diagnostics.norm_l2 == 0.0)
    assert result.psi_final.n_modes == 0


def test_nonlinear_term_exact_for_two_modes():
    # 3 d/dx (psi^2) for psi = 2a cos(2 pi x) + 2b cos(4 pi x), exact modes
    a, b = 0.3, 0.17
    m = 64
    stepper = _Etdrk4(m, 1e-4, dealias=True)
    spec = np.zeros(m // 2 + 1, dtype=complex)
    spec[1] = a * m
    spec[2] = b * m
    got = stepper.nonlinear(spec) / m
    c_sq = {1: 2 * a * b, 2: a**2, 3: 2 * a * b, 4: b**2}
    for mode, value in c_sq.items():
        expect = 3j * 2 * np.pi * mode * value
        assert got[mode] == pytest.approx(expect, abs=1e-13)
    assert got[0] == 0.0


def test_conservation_short_run():
    psi0 = TrigPotential.from_cosines([(1, 0.5)])
    cfg = FlowConfig(modes=256, dt=2e-4, t_end=0.1, record_every=100)
    diag = evolve(psi0, cfg).diagnostics
    n0 = diag.norm_l2[0] ** 2
    assert np.max(np.abs(diag.norm_l2**2 - n0)) / n0 < 1e-8
    assert np.max(np.abs(diag.energy - diag.energy[0])) / abs(diag.energy[0]) < 1e-7
    assert np.all(diag.mean_value == 0.0)


def test_fourth_order_solution_convergence():
    psi0 = TrigPotential.from_cosines([(1, 0.5)])
    t_end = 0.02

    def final_spec(dt):
        cfg = FlowConfig(modes=128, dt=dt, t_end=t_end,
                         record_every=int(round(t_end / dt)))
        res = evolve(psi0, cfg)
        c = np.zeros(64, dtype=complex)
        c[: res.psi_final.n_modes] = res.psi_final.coeffs[:64]
        return c

    ref = final_spec(6.25e-6)
    err = [np.linalg.norm(final_spec(dt) - ref) for dt in (4e-4, 2e-4, 1e-4)]
    assert 10.0 < err[0] / err[1] < 24.0
    assert 10.0 < err[1] / err[2] < 24.0


def test_projector_identity_inside_cutoff():
    psi0 = TrigPotential.from_cosines([(3, 0.4)])
    cfg = FlowConfig(modes=64, dt=5e-4, t_end=0.01, record_every=20,
                     projector_cutoffs=(3,))
    diag = evolve(psi0, cfg).diagnostics
    assert diag.projector_norms[3][0] == pytest.approx(
        sobolev_norm(psi0, 0.0), rel=1e-12)


def test_blowup_detection_aborts():
    psi0 = TrigPotential.from_cosines([(1, 40.0)])
    cfg = FlowConfig(modes=64, dt=1e-2, t_end=0.5, record_every=2)
    with pytest.raises(FlowError) as info:
        evolve(psi0, cfg)
    assert info.value.last_state is not None
    assert info.value.time is not None


def test_actions_conserved_short(rng):
    psi0 = TrigPotential.from_cosines([(1, 0.5)])
    cfg = FlowConfig(modes=128, dt=2e-4, t_end=0.04, record_every=100,
                     track_actions=True, action_count=4)
    diag = evolve(psi0, cfg).diagnostics
    drift = np.max(np.abs(diag.actions - diag.actions[0]))
    assert drift <= 1e-7 * max(diag.actions[0, 0], 1e-12)


def test_cascade_rejects_large_epsilon():
    with pytest.raises(ConfigError):
        cascade_experiment(n_high=4, n_low=2, amplitude=50.0)
    with pytest.raises(ConfigError):
        cascade_experiment(n_high=3, n_low=2)


def test_cascade_zero_amplitude_trivial():
    cfg = FlowConfig(modes=64, dt=1e-3, t_end=0.01, record_every=5,
                     projector_cutoffs=(2,))
    rep = cascade_experiment(n_high=16, n_low=2, amplitude=0.0, config=cfg)
    assert rep.epsilon == 0.0
    assert rep.passed
    assert np.all(rep.low_margins >= 0.0)


def test_cascade_short_run_bounds_hold():
    cfg = FlowConfig(modes=256, dt=2e-5, t_end=0.02, record_every=250,
                     projector_cutoffs=(2,))
    rep = cascade_experiment(n_high=16, n_low=2, amplitude=float(np.pi), config=cfg)
    assert rep.epsilon == pytest.approx(1.0 / 32.0, rel=1e-12)
    assert rep.passed
    assert np.all(rep.hm1_margins >= 0.0)
    assert np.all(rep.low_margins >= 0.0)
    assert np.all(rep.split_margins >= 0.0)
