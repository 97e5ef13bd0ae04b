"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import json
import time

import numpy as np
import pytest

from metriplex import (
    LieAlgebraStructure,
    ReducedSystem,
    build,
    check_axioms,
    check_casimirs,
    check_equivalence,
    check_laws,
    simulate,
    simulate_reduced,
    so3,
)
from metriplex.brackets import canonical_poisson
from metriplex.cli import main
from metriplex.reduction import ReducedState, half_norm_squared, lie_poisson_structure
from metriplex.systems import Observable, ThermoMechState
from metriplex.verify import jacobi_residual

NAMES = ["damped_oscillator_thermal", "compartment_diffusion", "rigid_body_linear_friction",
         "rigid_body_double_bracket"]

DEGENERACY = ["poisson.H_S_commute", "single.H_H", "double.H_S", "met.H_G",
              "red_single.h_h", "red_double.h_S", "red_met.h_g", "orbit_met.h_g"]
SIGNS = {"single.S_H_sign": 1e-12, "double.S_S_sign": 1e-12, "met.G_G_sign": 1e-10,
         "red_single.S_h_sign": 1e-12, "red_double.S_S_sign": 1e-12,
         "red_met.g_g_sign": 1e-10, "orbit_met.g_g_sign": 1e-10}


def verdict(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


@pytest.fixture(scope="module")
def axiom_reports():
    start = time.perf_counter()
    reports = {name: check_axioms(build(name).system, n_states=100, n_observables=20, seed=0) for name in NAMES}
    return reports, time.perf_counter() - start


def collect(reports, names):
    return {(s, c.name): c for s, rep in reports.items() for c in rep.checks if c.name in names}


def test_criterion_1_degeneracy_ledger(axiom_reports):
    reports, elapsed = axiom_reports
    found = collect(reports, DEGENERACY)
    worst = max(c.residual for c in found.values())
    present = {name for _, name in found}
    ok = worst <= 1e-10 and elapsed < 10.0 and present == set(DEGENERACY)
    assert verdict(1, ok, f"max degeneracy residual {worst:.2e} over {len(found)} checks, {elapsed:.2f} s")


def test_criterion_2_sign_ledger(axiom_reports):
    reports, _ = axiom_reports
    found = collect(reports, SIGNS)
    # residual is -min(value), so value >= -tol means residual <= tol
    bad = [(s, n, -c.residual) for (s, n), c in found.items() if c.residual > SIGNS[n]]
    worst = min(-c.residual for c in found.values())
    ok = not bad and {n for _, n in found} == set(SIGNS)
    assert verdict(2, ok, f"smallest sign value {worst:.2e} over {len(found)} checks; violations {bad}")


def test_criterion_3_symmetry_leibniz_bilinearity(axiom_reports):
    reports, _ = axiom_reports
    limits = {"symmetry": 1e-12, "leibniz": 1e-9, "bilinearity": 1e-10}
    worst = {k: 0.0 for k in limits}
    for rep in reports.values():
        for c in rep.checks:
            family, kind = c.name.split(".", 1)
            if kind in limits and family in ("single", "double", "red_single", "red_double"):
                worst[kind] = max(worst[kind], c.residual)
    ok = all(worst[k] <= limits[k] for k in limits)
    assert verdict(3, ok, ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


def test_criterion_4_formulation_equivalence():
    worst, count = 0.0, 0
    for name in NAMES:
        rep = check_equivalence(build(name).system, n_states=100, seed=0)
        for c in rep.checks:
            if c.name != "equivalence.double_K_symmetry":
                worst = max(worst, c.residual)
                count += 1
    assert verdict(4, worst <= 1e-9, f"max componentwise discrepancy {worst:.2e} over {count} field pairs")


def test_criterion_5_first_and_second_laws():
    lines, ok = [], True
    for name in NAMES:
        spec = build(name)
        if spec.kind == "thermo":
            t_end = 10.0 if name == "damped_oscillator_thermal" else spec.t_end
            traj = simulate(spec.system, spec.initial_state, t_end, 1e-3)
        else:
            traj = simulate_reduced(spec.system, spec.initial_state, 10.0, 1e-3)
        rep = check_laws(traj)
        if name == "compartment_diffusion":
            drift = rep["laws.mass_drift"].residual
            ok &= drift <= 1e-9
            lines.append(f"{name} mole drift {drift:.2e}")
        else:
            e, s = rep["laws.energy_drift"].residual, -rep["laws.entropy_monotone"].residual
            ok &= e <= 1e-6 and s >= -1e-9
            lines.append(f"{name} energy drift {e:.2e} min dS {s:.2e}")
    assert verdict(5, ok, "; ".join(lines))


def test_criterion_6_compartment_equilibrium():
    spec = build("compartment_diffusion", {"K": 2, "G": 1.0, "c": 1.0, "N1": 2.0, "N2": 0.0})
    traj = simulate(spec.system, spec.initial_state, 5.0, 1e-3)
    t = traj.times
    err = np.max(np.abs(traj.column("N_1") - (1.0 + np.exp(-2.0 * t))))
    ok = err <= 1e-6 and t[-1] == 5.0
    assert verdict(6, ok, f"max |N1 - (1 + exp(-2t))| = {err:.2e}")


def test_criterion_7_orbit_preservation():
    db, lf = build("rigid_body_double_bracket"), build("rigid_body_linear_friction")
    c = half_norm_squared(3)
    t1 = simulate_reduced(db.system, db.initial_state, 10.0, 1e-3)
    t2 = simulate_reduced(lf.system, lf.initial_state, 10.0, 1e-3)
    drift = check_casimirs(t1, (c,), preserved=True)["casimir.drift"].residual
    decrease = c(t2.state(0)) - c(t2.state(len(t2) - 1))
    ok = drift <= 1e-8 and decrease > 1e-2
    assert verdict(7, ok, f"double-bracket drift {drift:.2e}, linear-friction decrease {decrease:.3e}")


def test_criterion_8_jacobi():
    rng = np.random.default_rng(0)
    canon = max(jacobi_residual(canonical_poisson(2, 1),
                                ThermoMechState(rng.normal(size=2), rng.normal(size=2), rng.normal(), rng.normal(size=1)),
                                seed=i) for i in range(5))
    h = Observable(lambda x: 0.5 * float(x.mu @ x.mu) + x.S, lambda x: np.concatenate([x.mu, [1.0]]))
    good = lie_poisson_structure(ReducedSystem(so3(), h))
    C = so3().constants.copy()
    C[0, 1, 0], C[1, 0, 0] = 1.0, -1.0  # [e1,e2] = e3 + e1
    bad = lie_poisson_structure(ReducedSystem(LieAlgebraStructure(C, validate=False), h))
    points = [ReducedState(rng.normal(size=3), (), 0.0) for _ in range(5)]
    lp = max(jacobi_residual(good, y, seed=i) for i, y in enumerate(points))
    corrupt = max(jacobi_residual(bad, y, seed=i) for i, y in enumerate(points))
    ok = canon <= 1e-6 and lp <= 1e-6 and corrupt > 1e-2
    assert verdict(8, ok, f"canonical {canon:.2e}, so3 {lp:.2e}, corrupted {corrupt:.2e}")


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "rigid_body_double_bracket", "seed": 11, "t_end": 2.0,
                               "n_states": 20, "n_observables": 6}))
    codes = [main(["run", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    a, b = ((tmp_path / d / "report.json").read_bytes() for d in ("a", "b"))
    ok = codes == [0, 0] and a == b
    assert verdict(9, ok, f"exit codes {codes}, reports identical: {a == b}")
