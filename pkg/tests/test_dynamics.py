import csv
import warnings

import numpy as np
import pytest

from metriplex import (
    DivergedAt,
    HamiltonianSystem,
    LinearTransport,
    NegativeMoles,
    Observable,
    ThermoMechState,
    ZeroTemperature,
    admissibility_audit,
    build,
    direct_vector_field,
    entropy_production_rate,
    simulate,
)
from metriplex.dynamics import integrate, state_labels


def oscillator(friction=None, external_force=None, lam=None, alpha=1.0):
    H = Observable(
        lambda x: 0.5 * x.p[0] ** 2 + 0.5 * x.q[0] ** 2 + alpha * x.S,
        lambda x: np.array([x.q[0], x.p[0], alpha]),
        "H",
    )
    lt = None if lam is None else LinearTransport(lambda q, S: np.array([[lam]]))
    return HamiltonianSystem(1, 0, H, friction=friction, external_force=external_force, linear_transport=lt)


def two_compartments(G=1.0):
    H = Observable(lambda x: x.S + 0.5 * x.N @ x.N, lambda x: np.concatenate([[0.0, 0.0, 1.0], x.N]))
    lt = LinearTransport(lambda q, S: np.zeros((1, 1)), lambda S, N: np.array([[0.0, G], [G, 0.0]]))
    return HamiltonianSystem(1, 2, H, linear_transport=lt)


# --- direct field -------------------------------------------------------------

def test_reversible_limit_is_canonical():
    sys = oscillator()
    x = sys.state([0.3], [-1.2], 0.5)
    np.testing.assert_allclose(direct_vector_field(sys, x), [-1.2, -0.3, 0.0])
    assert entropy_production_rate(sys, x) == 0.0


def test_damped_oscillator_hand_values():
    sys = oscillator(friction=lambda q, v, S: -v)
    x = sys.state([0.0], [2.0], 0.0)
    np.testing.assert_allclose(direct_vector_field(sys, x), [2.0, -2.0, 4.0])
    assert entropy_production_rate(sys, x) == pytest.approx(4.0)


def test_two_compartment_hand_values():
    sys = two_compartments()
    # mu = N = (2, 1); J^{2->1} = -G (mu^1 - mu^2) = -1
    x = sys.state([0.0], [0.0], 0.0, [2.0, 1.0])
    J = sys.flux(x.S, x.N, x.N)
    assert J[0, 1] == pytest.approx(-1.0)
    f = direct_vector_field(sys, x)
    np.testing.assert_allclose(f[3:], [-1.0, 1.0])
    assert entropy_production_rate(sys, x) == pytest.approx(1.0)
    assert f[2] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_entropy_rate_matches_field_component(seed):
    sys = build("compartment_diffusion", {"K": 3}).system
    x = sys.sampler(np.random.default_rng(seed))
    assert abs(entropy_production_rate(sys, x) - direct_vector_field(sys, x)[2]) <= 1e-12


def test_external_force_enters_momentum_only():
    sys = oscillator(external_force=lambda q, v, S: np.array([5.0]))
    x = sys.state([0.0], [1.0], 0.0)
    np.testing.assert_allclose(direct_vector_field(sys, x), [1.0, 5.0, 0.0])
    np.testing.assert_allclose(direct_vector_field(sys, x, external=False), [1.0, 0.0, 0.0])


def test_zero_temperature_raises():
    sys = oscillator(alpha=0.0)
    with pytest.raises(ZeroTemperature):
        direct_vector_field(sys, sys.state([0.0], [1.0], 0.0))


# --- integrator ---------------------------------------------------------------

def test_zero_field_gives_constant_trajectory():
    x0 = ThermoMechState([1.0], [2.0], 3.0)
    traj = integrate(lambda x: np.zeros(3), x0, 1.0, 0.1)
    assert len(traj) == 11
    np.testing.assert_array_equal(traj.states, np.tile(x0.as_array(), (11, 1)))


def test_harmonic_oscillator_returns_after_full_period():
    sys = oscillator()
    x0 = sys.state([1.0], [0.0], 0.0)
    traj = simulate(sys, x0, 2 * np.pi, 1e-3, stride=1000)
    assert traj.times[-1] == 2 * np.pi
    assert np.max(np.abs(traj.states[-1] - x0.as_array())) <= 1e-9


def test_times_strictly_increasing_with_stride_and_partial_step():
    traj = integrate(lambda x: np.zeros(3), ThermoMechState([0.0], [0.0], 0.0), 1.05, 0.1, stride=3)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] == 1.05
    np.testing.assert_allclose(traj.times[:-1], [0.0, 0.3, 0.6, 0.9])


def test_damped_thermal_oscillator_laws():
    spec = build("damped_oscillator_thermal")
    traj = simulate(spec.system, spec.initial_state, spec.t_end, spec.h)
    H = traj.diagnostics["H"]
    assert np.max(np.abs(H - H[0])) / max(1.0, abs(H[0])) <= 1e-7
    assert np.all(np.diff(traj.diagnostics["S"]) > 0)


def test_displacement_diagnostic_is_primitive_of_mu():
    spec = build("compartment_diffusion")
    traj = simulate(spec.system, spec.initial_state, 2.0, 1e-3)
    W, mu, t = traj.diagnostics["W"], traj.diagnostics["mu"], traj.times
    assert np.all(W[0] == 0.0)
    dW = np.diff(W, axis=0) / np.diff(t)[:, None]
    mid = 0.5 * (mu[1:] + mu[:-1])
    assert np.max(np.abs(dW - mid)) <= 1e-6


def test_divergence_reported_with_time():
    x0 = ThermoMechState([1.0], [0.0], 0.0)
    with pytest.raises(DivergedAt) as info:
        integrate(lambda x: np.array([x.q[0] ** 2 * 1e3, 0.0, 0.0]), x0, 10.0, 0.01)
    assert 0 < info.value.t <= 10.0


def test_zero_temperature_during_integration_is_stamped():
    # T = S falls through zero for S0 > 0 when heat flows out
    H = Observable(lambda x: 0.5 * x.p[0] ** 2 + 0.5 * x.S ** 2, lambda x: np.array([0.0, x.p[0], x.S]))
    sys = HamiltonianSystem(1, 0, H, audit=False)
    field = lambda x: np.array([0.0, 0.0, -1.0])
    with pytest.raises(ZeroTemperature) as info:
        integrate(lambda x: direct_vector_field(sys, x) + field(x), sys.state([0.0], [0.0], 0.5), 2.0, 0.1)
    assert info.value.t is not None


def test_negative_moles_abort_and_warn():
    sys = build("compartment_diffusion", sabotage=True).system
    x0 = sys.state([0.0], [0.0], 0.0, [1.0, 0.5])
    with pytest.raises(NegativeMoles):
        simulate(sys, x0, 5.0, 1e-2, on_negative_moles="abort")
    with pytest.warns(RuntimeWarning):
        simulate(sys, x0, 5.0, 1e-2, on_negative_moles="warn")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        simulate(sys, x0, 5.0, 1e-2, on_negative_moles="ignore")


@pytest.mark.parametrize("kwargs", [dict(h=0.0), dict(t_end=-1.0), dict(stride=0), dict(on_negative_moles="x")])
def test_integrate_rejects_bad_arguments(kwargs):
    args = dict(t_end=1.0, h=0.1)
    args.update(kwargs)
    with pytest.raises(ValueError):
        integrate(lambda x: np.zeros(3), ThermoMechState([0.0], [0.0], 0.0), **args)


def test_csv_columns_and_parse(tmp_path):
    spec = build("compartment_diffusion")
    traj = simulate(spec.system, spec.initial_state, 0.1, 1e-2)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "q_1", "p_1", "S", "N_1", "N_2", "H", "T", "sigma", "W_1", "W_2", "totalN"]
    assert len(rows) == len(traj) + 1
    assert float(rows[-1][0]) == pytest.approx(0.1)


def test_state_labels():
    assert state_labels(2, 1) == ["q_1", "q_2", "p_1", "p_2", "S", "N_1"]


# --- admissibility ------------------------------------------------------------

def _states(sys, n=30, seed=0):
    rng = np.random.default_rng(seed)
    return [sys.sampler(rng) for _ in range(n)]


def test_admissibility_linear_laws_pass():
    sys = build("compartment_diffusion", {"K": 3}).system
    rep = admissibility_audit(sys, _states(sys))
    assert rep.passed and rep.min_transport_eigenvalue >= 0


def test_admissibility_anti_dissipative_fails():
    sys = oscillator(friction=lambda q, v, S: +v)
    rep = admissibility_audit(sys, _states(sys))
    assert not rep.passed and rep.max_friction_power > 0
    assert rep.worst_state is not None


def test_admissibility_zero_laws_pass_with_zeros():
    sys = oscillator()
    rep = admissibility_audit(sys, _states(sys))
    assert rep.passed
    assert rep.max_friction_power == 0.0 and rep.max_flux_power == 0.0
    assert rep.min_transport_eigenvalue is None
