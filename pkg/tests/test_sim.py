import numpy as np
import pytest

import modalpf as m


def decay_1d():
    return m.PolynomialSystem(n=1, A=np.array([[-1.0]]), tensors={})


def test_scalar_exponential_endpoint():
    traj = m.integrate(decay_1d(), np.array([1.0]), dt=1e-3, T=1.0)
    assert traj.samples[-1, 0] == pytest.approx(np.exp(-1.0), abs=1e-12)
    assert traj.dt == 1e-3
    assert len(traj.samples) == 1001
    assert traj.provenance == "integrated"


def test_rk4_endpoint_error_halves_sixteen_fold():
    errors = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        traj = m.integrate(decay_1d(), np.array([1.0]), dt=dt, T=1.0)
        errors.append(abs(traj.samples[-1, 0] - np.exp(-1.0)))
    for hi, lo in zip(errors, errors[1:]):
        assert 12.0 <= hi / lo <= 20.0


def test_integration_is_deterministic(ex2):
    a = m.integrate(ex2, m.perturb_state(4, 2, 1.0), dt=1e-3, T=2.0)
    b = m.integrate(ex2, m.perturb_state(4, 2, 1.0), dt=1e-3, T=2.0)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_ex1_decaying_oscillation(ex1):
    # perturbing state 1 rings the 4.97 rad/s mode with a -0.5 decay rate
    traj = m.integrate(ex1, m.perturb_state(4, 0, 1.0), dt=1e-3, T=10.0)
    x = traj.samples[:, 0] - traj.samples[:, 0].mean()
    crossings = np.sum(np.sign(x[1:]) != np.sign(x[:-1]))
    freq = np.pi * crossings / traj.t[-1]
    assert freq == pytest.approx(4.97, abs=0.15)
    # envelope decay over one mean removal window
    early = np.max(np.abs(x[:1000]))
    late = np.max(np.abs(x[5000:6000]))
    assert late / early == pytest.approx(np.exp(-0.5 * 5.0), rel=0.4)


def test_linear_integration_matches_modal_sum(ex1):
    basis = m.apply_scheme(m.eigendecompose(ex1), "II")
    x0 = m.perturb_state(4, 1, 1.0)
    traj = m.integrate(ex1, x0, dt=1e-3, T=10.0)
    z0 = basis.Psi @ x0
    oracle = np.real(
        np.einsum("ki,it,i->tk", basis.Phi, np.exp(np.outer(basis.eigenvalues, traj.t)), z0)
    )
    assert np.max(np.abs(traj.samples - oracle)) <= 1e-7


def test_divergence_error_carries_last_index():
    explode = m.PolynomialSystem(n=1, A=np.array([[0.0]]), tensors={2: {(0, (0, 0)): 1.0}})
    with pytest.raises(m.DivergenceError) as err:
        m.integrate(explode, np.array([1.0]), dt=1e-3, T=2.0)
    assert 0 < err.value.last_index < 2000


def test_perturb_state():
    np.testing.assert_array_equal(m.perturb_state(4, 2, 1.0), [0, 0, 1, 0])
    np.testing.assert_array_equal(m.perturb_state(4, 0, 0.138), [0.138, 0, 0, 0])
    np.testing.assert_array_equal(m.perturb_state(4, 0, 0.0), np.zeros(4))
    with pytest.raises(ValueError):
        m.perturb_state(4, 7, 1.0)


def test_integrate_validates_inputs(ex1):
    with pytest.raises(ValueError):
        m.integrate(ex1, np.zeros(4), dt=0.0, T=1.0)
    with pytest.raises(ValueError):
        m.integrate(ex1, np.zeros(4), dt=1e-2, T=1e-3)
    with pytest.raises(ValueError):
        m.integrate(ex1, np.zeros(3), dt=1e-2, T=1.0)


def test_ensemble_counts_and_determinism():
    sys = m.PolynomialSystem(n=2, A=np.diag([-1.0, -2.0]), tensors={})
    dist = m.InitialDistribution(seed=5, samples=100)
    snaps = m.ensemble(sys, dist, dt=1e-2, steps=7)
    assert snaps.pairs == 100 * 7
    assert snaps.diverged == 0
    again = m.ensemble(sys, dist, dt=1e-2, steps=7)
    np.testing.assert_array_equal(snaps.X, again.X)
    np.testing.assert_array_equal(snaps.Y, again.Y)


def test_ensemble_skips_and_counts_divergent_members():
    # x' = x^2 blows up in finite time for positive starts
    explode = m.PolynomialSystem(n=1, A=np.array([[0.0]]), tensors={2: {(0, (0, 0)): 1.0}})
    dist = m.InitialDistribution(seed=9, samples=20, radius=2.0)
    snaps = m.ensemble(explode, dist, dt=1e-3, steps=1500)
    assert 0 < snaps.diverged < 20
    assert snaps.pairs == (20 - snaps.diverged) * 1500


def test_trajectory_csv_header_and_precision():
    traj = m.integrate(decay_1d(), np.array([1.0 / 3.0]), dt=0.5, T=1.0)
    text = traj.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "t,x1"
    assert lines[1].startswith("0,0.333333333333333")
    assert len(lines) == 4
