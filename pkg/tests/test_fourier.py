import io

import numpy as np
import pytest

from hillkdv import (ConfigError, TrigPotential, antiderivative, derivative,
                     evaluate_grid, hamiltonian, l2_distance,
                     parse_potential_spec, project, read_potential,
                     sobolev_norm, write_potential)
from conftest import grid_quadrature, random_potential


def test_zero_potential_norms():
    zero = TrigPotential.zero()
    for m in (-1.0, 0.0, 1.0, 0.5):
        assert sobolev_norm(zero, m) == 0.0


def test_l2_norm_matches_quadrature_oracle():
    psi = TrigPotential.from_cosines([(1, 2.0)])   # 2 cos(2 pi x)
    oracle = np.sqrt(grid_quadrature(lambda x: psi.evaluate(x) ** 2))
    assert sobolev_norm(psi, 0.0) == pytest.approx(np.sqrt(2.0), rel=1e-14)
    assert sobolev_norm(psi, 0.0) == pytest.approx(oracle, rel=1e-9)


def test_minus_one_norm_is_antiderivative_l2():
    psi = TrigPotential.from_cosines([(1, 2.0)])
    # antiderivative of 2 cos(2 pi x) is sin(2 pi x) / pi
    oracle = np.sqrt(grid_quadrature(lambda x: (np.sin(2 * np.pi * x) / np.pi) ** 2))
    assert sobolev_norm(psi, -1.0) == pytest.approx(np.sqrt(2.0) / (2 * np.pi), rel=1e-14)
    assert sobolev_norm(psi, -1.0) == pytest.approx(oracle, rel=1e-9)


def test_parseval_against_grid(rng):
    for _ in range(5):
        psi = random_potential(rng, n_modes=64, norm=1.3)
        m = 4 * 64 + 1
        grid_value = np.mean(psi.sample(m) ** 2)
        assert sobolev_norm(psi, 0.0) ** 2 == pytest.approx(grid_value, rel=1e-12)


def test_antiderivative_closed_form():
    psi = TrigPotential.from_cosines([(1, 2.0)])
    q = antiderivative(psi)
    x = np.linspace(0, 1, 101)
    assert np.allclose(q.evaluate(x), np.sin(2 * np.pi * x) / np.pi, atol=1e-14)
    assert antiderivative(TrigPotential.zero()).n_modes == 0


def test_derivative_antiderivative_roundtrip(rng):
    psi = random_potential(rng, n_modes=12, norm=0.7)
    back = derivative(antiderivative(psi))
    assert l2_distance(back, psi) < 1e-15


def test_project_retention_and_selection():
    psi = TrigPotential.from_cosines([(1, 2.0), (4, 2.0)])
    assert project(psi, 10).allclose(psi)
    low = project(psi, 2)
    assert low.allclose(TrigPotential.from_cosines([(1, 2.0)]))
    assert project(project(psi, 2), 2).allclose(low)


def test_project_parseval_split(rng):
    psi = random_potential(rng, n_modes=16, norm=1.1)
    for cut in (3, 8):
        low = project(psi, cut)
        tail_sq = sobolev_norm(psi, 0.0) ** 2 - sobolev_norm(low, 0.0) ** 2
        high = TrigPotential(psi.coeffs.copy())
        high_coeffs = psi.coeffs.copy()
        high_coeffs[:cut] = 0.0
        high = TrigPotential(high_coeffs)
        assert sobolev_norm(high, 0.0) ** 2 == pytest.approx(tail_sq, rel=1e-12)
    for m in (-1.0, 0.0, 1.0):
        assert sobolev_norm(project(psi, 5), m) <= sobolev_norm(psi, m) + 1e-15


def test_hamiltonian_values():
    assert hamiltonian(TrigPotential.zero()) == 0.0
    psi = TrigPotential.from_cosines([(1, 2.0)])
    # the cubic term integrates to zero by parity, leaving 4 pi^2
    assert hamiltonian(psi) == pytest.approx(4 * np.pi**2, rel=1e-14)
    oracle = 0.5 * grid_quadrature(
        lambda x: (-2 * 2 * np.pi * np.sin(2 * np.pi * x)) ** 2
        + 2 * psi.evaluate(x) ** 3,
        m=200001,
    )
    assert hamiltonian(psi) == pytest.approx(oracle, rel=1e-10)


def test_hamiltonian_translation_invariance(rng):
    psi = random_potential(rng, n_modes=6, norm=0.9)
    assert hamiltonian(psi.translate(0.3717)) == pytest.approx(hamiltonian(psi), rel=1e-12)


def test_evaluate_grid_basics(rng):
    assert np.all(evaluate_grid(TrigPotential.zero(), 16) == 0.0)
    psi = TrigPotential.from_cosines([(1, 2.0)])
    samples = evaluate_grid(psi, 8)
    assert np.allclose(samples, 2 * np.cos(2 * np.pi * np.arange(8) / 8), atol=1e-14)
    rnd = random_potential(rng, n_modes=9, norm=0.8)
    m = 2 * 9 + 1
    again = TrigPotential.from_samples(rnd.sample(m), n_modes=9)
    assert l2_distance(again, rnd) < 1e-14


def test_evaluate_grid_aliasing_guard():
    psi = TrigPotential.from_cosines([(4, 1.0)])
    with pytest.raises(ValueError):
        evaluate_grid(psi, 7)


def test_serialization_roundtrip(rng):
    psi = random_potential(rng, n_modes=5, norm=0.4)
    buf = io.StringIO()
    write_potential(psi, buf)
    buf.seek(0)
    back = read_potential(buf)
    assert l2_distance(back, psi) == 0.0


def test_serialization_rejects_garbage():
    with pytest.raises(ConfigError):
        read_potential(io.StringIO("not a potential\n"))
    with pytest.raises(ConfigError):
        read_potential(io.StringIO("modes 2\n1 0.5\n"))
    with pytest.raises(ConfigError):
        read_potential(io.StringIO("modes 1\n3 0.5 0.0\n"))


def test_parse_potential_spec():
    psi = parse_potential_spec("cos:1:0.5, cos:3:0.25")
    assert psi.allclose(TrigPotential.from_cosines([(1, 0.5), (3, 0.25)]))
    with pytest.raises(ConfigError):
        parse_potential_spec("sin:1:0.5")
    with pytest.raises(ConfigError):
        parse_potential_spec("cos:one:0.5")


def test_reality_and_zero_mean(rng):
    psi = random_potential(rng, n_modes=7, norm=1.0)
    x = rng.uniform(0, 1, 64)
    values = psi.evaluate(x)
    assert np.all(np.isreal(values))
    assert np.mean(psi.sample(64)) == pytest.approx(0.0, abs=1e-15)
