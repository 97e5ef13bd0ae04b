import json

import numpy as np
import pytest

from metriplex import (
    HamiltonianSystem,
    LieAlgebraStructure,
    LinearTransport,
    Observable,
    ReducedSystem,
    ThermoMechState,
    build,
    check_axioms,
    check_casimirs,
    check_equivalence,
    check_jacobi,
    check_laws,
    simulate,
    so3,
)
from metriplex.brackets import canonical_poisson
from metriplex.reduction import ReducedState, lie_poisson_structure
from metriplex.verify import CHECKS, LEDGER, VerificationReport, _check_ledger, jacobi_residual

SIGN_CHECKS = {"single.S_H_sign", "double.S_S_sign", "met.G_G_sign", "admissibility.friction",
               "admissibility.transport"}
DEGENERACY_CHECKS = ["poisson.H_S_commute", "single.H_H", "double.H_S", "met.H_G"]


def oscillator(lam, alpha=1.0, sampler=None):
    H = Observable(lambda x: 0.5 * x.p[0] ** 2 + 0.5 * x.q[0] ** 2 + alpha * x.S,
                   lambda x: np.array([x.q[0], x.p[0], alpha]), "H")
    return HamiltonianSystem(1, 0, H, linear_transport=LinearTransport(lambda q, S: np.array([[lam]])),
                             name="osc", sampler=sampler)


# --- report container -----------------------------------------------------------

def test_pass_rule_and_schema():
    rep = VerificationReport(3, "sys")
    rep.add("single.H_H", 1e-11, 1e-10)
    rep.add("double.H_S", 2e-10, 1e-10)
    assert rep["single.H_H"].passed and not rep["double.H_S"].passed
    assert not rep.passed
    d = json.loads(rep.to_json())
    assert d["seed"] == 3 and d["system"] == "sys"
    assert [c["name"] for c in d["checks"]] == ["single.H_H", "double.H_S"]
    assert set(d["checks"][0]) >= {"name", "residual", "threshold", "pass"}


def test_boundary_value_passes():
    rep = VerificationReport(0, "s")
    assert rep.add("single.H_H", 1e-10, 1e-10).passed


def test_duplicate_and_unregistered_checks_rejected():
    rep = VerificationReport(0, "s")
    rep.add("single.H_H", 0.0, 1e-10)
    with pytest.raises(ValueError):
        rep.add("single.H_H", 0.0, 1e-10)
    with pytest.raises(KeyError):
        rep.add("made.up", 0.0, 1.0)
    other = VerificationReport(0, "s")
    other.add("single.H_H", 0.0, 1e-10)
    with pytest.raises(ValueError):
        rep.extend(other)


def test_nonfinite_residual_recorded_as_failure():
    rep = VerificationReport(0, "s")
    c = rep.add("single.H_H", np.inf, 1e-10)
    assert np.isfinite(c.residual) and not c.passed


def test_summary_lists_every_check():
    rep = check_axioms(oscillator(0.5), n_states=5, n_observables=4)
    text = rep.summary()
    for c in rep.checks:
        assert c.name in text
    assert f"{len(rep.checks)}/{len(rep.checks)} checks passed" in text


def test_every_ledger_name_is_registered():
    for names in LEDGER.values():
        for n in names:
            assert n in CHECKS


def test_missing_ledger_entry_fails_loudly():
    rep = VerificationReport(0, "s")
    rep.add("single.H_H", 0.0, 1e-10)
    with pytest.raises(RuntimeError):
        _check_ledger(rep, ["single"])


# --- axioms -----------------------------------------------------------------

def test_damped_oscillator_all_checks_pass():
    rep = check_axioms(build("damped_oscillator_thermal").system, n_states=30, n_observables=6)
    assert rep.passed, rep.summary()
    for fam in ("poisson", "single", "double", "met"):
        for n in LEDGER[fam]:
            assert rep.names().count(n) == 1


def test_anti_dissipative_friction_breaks_only_second_law():
    rep = check_axioms(oscillator(-1.0), n_states=30, n_observables=6)
    failed = {c.name for c in rep.failures()}
    assert failed and failed <= SIGN_CHECKS
    assert "single.S_H_sign" in failed and "double.S_S_sign" in failed
    for name in DEGENERACY_CHECKS:
        assert rep[name].passed


def test_reversible_system_brackets_identically_zero():
    rep = check_axioms(oscillator(0.0), n_states=20, n_observables=6)
    assert rep.passed
    for c in rep.checks:
        if c.name.split(".")[0] in ("single", "double", "met"):
            assert c.residual == 0.0 or c.name.endswith("_sign")


def test_zero_temperature_recorded_not_raised():
    def sampler(rng):
        return ThermoMechState(rng.normal(size=1), rng.normal(size=1), 0.0)

    H = Observable(lambda x: 0.5 * x.p[0] ** 2 + 0.5 * x.S ** 2, lambda x: np.array([0.0, x.p[0], x.S]))
    sys = HamiltonianSystem(1, 0, H, sampler=sampler, audit=False)
    rep = check_axioms(sys, n_states=5, n_observables=4)
    assert not rep["temperature.floor"].passed
    assert rep["temperature.floor"].residual == 5
    eq = check_equivalence(sys, n_states=3)
    assert not eq.passed


def test_axioms_are_deterministic():
    sys = build("rigid_body_linear_friction").system
    a = check_axioms(sys, n_states=10, n_observables=5, seed=7).to_json()
    b = check_axioms(sys, n_states=10, n_observables=5, seed=7).to_json()
    c = check_axioms(sys, n_states=10, n_observables=5, seed=8).to_json()
    assert a == b and a != c


def test_reduced_ledgers_present():
    rep = check_axioms(build("rigid_body_double_bracket").system, n_states=10, n_observables=5)
    assert rep.passed, rep.summary()
    for fam in ("lp", "red_single", "red_double", "orbit_met"):
        for n in LEDGER[fam]:
            assert n in rep
    assert "red_met.h_g" not in rep
    assert "double_bracket.casimir_orthogonality" in rep


def test_sabotaged_double_bracket_fails_second_law():
    rep = check_axioms(build("rigid_body_double_bracket", sabotage=True).system, n_states=10, n_observables=5)
    assert not rep["red_double.S_S_sign"].passed
    assert rep["red_double.h_S"].passed and rep["orbit_met.h_g"].passed


# --- equivalence ----------------------------------------------------------------

@pytest.mark.parametrize("name", ["damped_oscillator_thermal", "compartment_diffusion",
                                  "rigid_body_linear_friction", "rigid_body_double_bracket"])
def test_equivalence_on_scenarios(name):
    rep = check_equivalence(build(name).system, n_states=20)
    assert rep.passed, rep.summary()


def test_equivalence_with_fd_gradients_uses_loose_tolerance():
    H = Observable(lambda x: 0.5 * x.p[0] ** 2 + 0.5 * x.q[0] ** 2 + x.S)
    sys = HamiltonianSystem(1, 0, H, linear_transport=LinearTransport(lambda q, S: np.array([[0.3]])))
    rep = check_equivalence(sys, n_states=10)
    assert all(c.threshold == 1e-5 for c in rep.checks if c.name != "equivalence.double_K_symmetry")
    assert rep.passed


def test_reversible_equivalence_fields_zero():
    rep = check_equivalence(oscillator(0.0), n_states=10)
    assert all(c.residual == 0.0 for c in rep.checks)


# --- Jacobi -------------------------------------------------------------------

def test_jacobi_canonical_and_so3():
    x = ThermoMechState([0.3, -0.4], [1.0, 0.2], 0.1, [1.0])
    assert jacobi_residual(canonical_poisson(2, 1), x, seed=1) <= 1e-6
    rs = build("rigid_body_linear_friction").system
    y = ReducedState([0.2, -1.0, 0.5], (), 0.0)
    assert jacobi_residual(lie_poisson_structure(rs), y, seed=1) <= 1e-6


def test_jacobi_detects_corrupted_constants():
    C = so3().constants.copy()
    C[0, 1, 0], C[1, 0, 0] = 1.0, -1.0
    alg = LieAlgebraStructure(C, validate=False)
    h = Observable(lambda x: 0.5 * float(x.mu @ x.mu) + x.S, lambda x: np.concatenate([x.mu, [1.0]]))
    rep = check_jacobi(ReducedSystem(alg, h), seed=0)
    assert rep["jacobi.poisson"].residual > 1e-2 and not rep.passed


# --- laws and Casimirs ----------------------------------------------------------

def test_laws_on_damped_oscillator():
    spec = build("damped_oscillator_thermal")
    rep = check_laws(simulate(spec.system, spec.initial_state, 10.0, 1e-3))
    assert rep.passed
    assert "laws.mass_drift" not in rep


def test_pure_hamiltonian_flow_keeps_entropy_constant():
    sys = oscillator(0.0)
    traj = simulate(sys, sys.state([1.0], [0.0], 0.3), 2.0, 1e-3)
    assert np.all(traj.diagnostics["S"] == 0.3)
    assert check_laws(traj)["laws.entropy_monotone"].residual == 0.0


def test_mass_drift_on_diffusion():
    spec = build("compartment_diffusion", {"K": 4, "N2": 1.0})
    rep = check_laws(simulate(spec.system, spec.initial_state, 5.0, 1e-3))
    assert rep["laws.mass_drift"].residual <= 1e-9


def test_laws_flag_entropy_decrease():
    spec = build("damped_oscillator_thermal", sabotage=True)
    rep = check_laws(simulate(spec.system, spec.initial_state, 1.0, 1e-3))
    assert not rep["laws.entropy_monotone"].passed


def test_casimir_checks_both_modes():
    from metriplex import simulate_reduced

    db = build("rigid_body_double_bracket")
    lf = build("rigid_body_linear_friction")
    t1 = simulate_reduced(db.system, db.initial_state, 3.0, 1e-3, stride=10)
    t2 = simulate_reduced(lf.system, lf.initial_state, 3.0, 1e-3, stride=10)
    assert check_casimirs(t1, db.system.casimirs, preserved=True).passed
    assert not check_casimirs(t2, lf.system.casimirs, preserved=True).passed
    assert check_casimirs(t2, lf.system.casimirs, preserved=False).passed
    assert not check_casimirs(t1, db.system.casimirs, preserved=False).passed
