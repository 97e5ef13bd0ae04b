"""Seeded numerical certification of bracket axioms, field equivalence and laws.

Checks never raise on a violated identity; each one is recorded with its worst
residual, threshold and the state where the worst value occurred. A check passes
iff ``residual <= threshold``. Sign conditions are stored as ``-min(value)`` so
the same rule applies.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .brackets import (
    canonical_poisson,
    dissipative_field_double,
    dissipative_field_metriplectic,
    dissipative_field_single,
    double_grad,
    hamiltonian_field,
    metriplectic_grad,
    single_grad,
    _transport,
)
from .dynamics import Trajectory, admissibility_audit, direct_vector_field
from .errors import ZeroTemperature
from .reduction import (
    ReducedSystem,
    casimir_drift,
    lie_poisson_structure,
    orbit_dissipative_field,
    orbit_gradient,
    orbit_metriplectic_grad,
    reduced_context,
    reduced_dissipative_field_double,
    reduced_dissipative_field_metriplectic,
    reduced_dissipative_field_single,
    reduced_double_grad,
    reduced_hamiltonian_field,
    reduced_metriplectic_grad,
    reduced_single_grad,
    reduced_vector_field,
    rsplit,
)
from .systems import (
    AUDIT_TOL,
    HamiltonianSystem,
    fd_gradient,
    random_quadratic,
    split,
    thermo_context,
)

TOL = {
    "degeneracy": 1e-10,
    "sign": 1e-12,
    "sign_met": 1e-10,
    "symmetry": 1e-12,
    "symmetry_met": 1e-10,
    "symmetry_orbit": 1e-9,
    "leibniz": 1e-9,
    "bilinearity": 1e-10,
    "identity": 1e-10,
    "admissibility": 1e-12,
    "equivalence": 1e-9,
    "equivalence_fd": 1e-5,
    "jacobi": 1e-6,
    "energy": 1e-6,
    "entropy": 1e-9,
    "mass": 1e-9,
    "casimir": 1e-8,
    "casimir_decay": 1e-2,
}

#: every check name with the identity it certifies (printed by ``metriplex explain``)
CHECKS = {
    "temperature.floor": "number of sampled states with |dH/dS| below the temperature floor (brackets undefined there)",
    "gradient.fd_consistency": "analytic gradient of the Hamiltonian vs central finite differences (relative)",
    "poisson.antisymmetry": "{F,G} + {G,F} = 0 for the canonical + zero Poisson bracket",
    "poisson.leibniz": "{FG,K} = F{G,K} + G{F,K}",
    "poisson.H_S_commute": "{H,S} = 0: entropy is a Casimir of the reversible bracket",
    "poisson.G_S_commute": "{G,S} = 0 for arbitrary G (stronger metriplectic degeneracy)",
    "single.H_H": "[H,H] = 0: first law for the single-generator dissipation bracket",
    "single.S_H_sign": "[S,H] >= 0: second law for the single-generator dissipation bracket",
    "single.leibniz": "[FG,H] = F[G,H] + G[F,H]: derivation in the first slot",
    "single.bilinearity": "[aF+bG,H] = a[F,H] + b[G,H]",
    "double.symmetry": "(F,G) = (G,F) for the double-generator bracket",
    "double.H_S": "(H,S) = 0: first law for the double-generator bracket",
    "double.S_S_sign": "(S,S) >= 0: second law for the double-generator bracket",
    "double.leibniz": "(FG,K) = F(G,K) + G(F,K)",
    "double.bilinearity": "(aF+bG,K) = a(F,K) + b(G,K)",
    "double.F_S_equals_single": "(F,S) equals the single-generator value [F,H]",
    "met.H_G": "(H,G)_met = 0 for arbitrary G",
    "met.G_G_sign": "(G,G)_met >= 0 for arbitrary G",
    "met.symmetry": "(F,G)_met = (G,F)_met",
    "met.S_S_equals_entropy_rate": "(S,S)_met equals the entropy production rate",
    "admissibility.friction": "<F^fr, v> <= 0 at sampled states",
    "admissibility.flux": "J^{l->k}(mu^k - mu^l) <= 0 at sampled states",
    "admissibility.transport": "symmetric part of the friction matrix and the transport coefficients are nonnegative",
    "lp.antisymmetry": "{f,g} + {g,f} = 0 for the reduced Lie-Poisson bracket",
    "lp.leibniz": "{fg,k} = f{g,k} + g{f,k} for the reduced Lie-Poisson bracket",
    "lp.h_S_commute": "{h,S} = 0 for the reduced Lie-Poisson bracket",
    "lp.casimir": "{c,g} = 0 for every declared Casimir c",
    "red_single.h_h": "[h,h]^red = 0",
    "red_single.S_h_sign": "[S,h]^red >= 0",
    "red_single.leibniz": "[fg,h]^red = f[g,h]^red + g[f,h]^red",
    "red_single.bilinearity": "[af+bg,h]^red = a[f,h]^red + b[g,h]^red",
    "red_double.symmetry": "(f,g)^red = (g,f)^red",
    "red_double.h_S": "(h,S)^red = 0",
    "red_double.S_S_sign": "(S,S)^red >= 0",
    "red_double.leibniz": "(fg,k)^red = f(g,k)^red + g(f,k)^red",
    "red_double.bilinearity": "(af+bg,k)^red = a(f,k)^red + b(g,k)^red",
    "red_double.f_S_equals_single": "(f,S)^red equals [f,h]^red",
    "red_met.h_g": "(h,g)^red_met = 0 for arbitrary g",
    "red_met.g_g_sign": "(g,g)^red_met >= 0 for arbitrary g",
    "red_met.symmetry": "(f,g)^red_met = (g,f)^red_met",
    "red_met.S_S_equals_entropy_rate": "(S,S)^red_met equals the entropy production rate",
    "orbit_met.h_g": "(h,g)^O_met = 0 on a coadjoint orbit for double-bracket friction",
    "orbit_met.g_g_sign": "(g,g)^O_met >= 0 on a coadjoint orbit",
    "orbit_met.symmetry": "(f,g)^O_met = (g,f)^O_met (evaluated through an asymmetric route)",
    "orbit_met.S_S_equals_entropy_rate": "(S,S)^O_met equals the entropy production rate",
    "double_bracket.casimir_orthogonality": "<dc, f^fr> = 0: the double-bracket force is tangent to coadjoint orbits",
    "admissibility.reduced_friction": "<f^fr, xi> <= 0 at sampled reduced states",
    "admissibility.reduced_transport": "gamma(n, S) positive semi-definite",
    "equivalence.single": "direct vector field = X_H + D_H (single generator)",
    "equivalence.double": "direct vector field = X_H + K dS (double generator)",
    "equivalence.double_K_symmetry": "K = K^T for the double-generator map",
    "equivalence.metriplectic": "direct vector field = X_H + K_met dS",
    "equivalence.reduced_single": "reduced field = X_h + D_h",
    "equivalence.reduced_double": "reduced field = X_h + K dS",
    "equivalence.reduced_metriplectic": "reduced field = X_h + K_met dS",
    "equivalence.orbit_metriplectic": "reduced field = X_h + K_O dS on coadjoint orbits",
    "jacobi.poisson": "{{f,g},k} + cyclic = 0 with finite-difference outer derivatives",
    "laws.energy_drift": "first law: max |H(t) - H(0)| / max(1, |H(0)|) along the trajectory",
    "laws.entropy_monotone": "second law: -min_i (S(t_{i+1}) - S(t_i))",
    "laws.mass_drift": "total mole number conservation: max |sum N(t) - sum N(0)|",
    "casimir.drift": "coadjoint orbit preservation: max |c(mu(t)) - c(mu(0))|",
    "casimir.decay": "orbits not preserved: -(c(mu(0)) - min c(mu(t))) against -threshold",
}

#: checks that must all be present once a bracket family is exercised
LEDGER = {
    "poisson": ["poisson.antisymmetry", "poisson.leibniz", "poisson.H_S_commute", "poisson.G_S_commute"],
    "single": ["single.H_H", "single.S_H_sign", "single.leibniz", "single.bilinearity"],
    "double": ["double.symmetry", "double.H_S", "double.S_S_sign", "double.leibniz", "double.bilinearity",
               "double.F_S_equals_single"],
    "met": ["met.H_G", "met.G_G_sign", "met.symmetry", "met.S_S_equals_entropy_rate"],
    "lp": ["lp.antisymmetry", "lp.leibniz", "lp.h_S_commute"],
    "red_single": ["red_single.h_h", "red_single.S_h_sign", "red_single.leibniz", "red_single.bilinearity"],
    "red_double": ["red_double.symmetry", "red_double.h_S", "red_double.S_S_sign", "red_double.leibniz",
                   "red_double.bilinearity", "red_double.f_S_equals_single"],
    "red_met": ["red_met.h_g", "red_met.g_g_sign", "red_met.symmetry", "red_met.S_S_equals_entropy_rate"],
    "orbit_met": ["orbit_met.h_g", "orbit_met.g_g_sign", "orbit_met.symmetry", "orbit_met.S_S_equals_entropy_rate"],
}


@dataclass
class Check:
    name: str
    residual: float
    threshold: float
    worst_state: Optional[list] = None

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.threshold)

    def to_dict(self) -> dict:
        out = {"name": self.name, "residual": float(self.residual), "threshold": float(self.threshold),
               "pass": self.passed}
        if self.worst_state is not None:
            out["worst_state"] = self.worst_state
        return out


@dataclass
class VerificationReport:
    seed: int
    system: str
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, name: str, residual: float, threshold: float, worst_state=None) -> Check:
        if name not in CHECKS:
            raise KeyError(f"unregistered check {name!r}")
        if name in self.names():
            raise ValueError(f"check {name!r} recorded twice")
        residual = float(residual)
        if not np.isfinite(residual):
            residual = float(np.finfo(float).max)
        ws = None if worst_state is None else [float(v) for v in np.asarray(worst_state).reshape(-1)]
        c = Check(name, residual, float(threshold), ws)
        self.checks.append(c)
        return c

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        for c in other.checks:
            if c.name in self.names():
                raise ValueError(f"check {c.name!r} recorded twice")
            self.checks.append(c)
        return self

    def names(self) -> list:
        return [c.name for c in self.checks]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.names()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        out = {"seed": int(self.seed), "system": self.system, "checks": [c.to_dict() for c in self.checks]}
        if self.meta:
            out["meta"] = self.meta
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def summary(self) -> str:
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [f"system: {self.system}   seed: {self.seed}",
                 f"{'check':<{width}}  {'residual':>12}  {'threshold':>10}  result"]
        for c in self.checks:
            lines.append(f"{c.name:<{width}}  {c.residual:>12.3e}  {c.threshold:>10.1e}  {'PASS' if c.passed else 'FAIL'}")
        n_fail = len(self.failures())
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


class _Worst:
    """Running maximum of a residual together with the state that produced it."""

    def __init__(self):
        self.value = 0.0
        self.state = None

    def update(self, value, x):
        value = float(value)
        if not np.isfinite(value):
            value = np.inf
        if self.state is None or value > self.value:
            self.value, self.state = value, x.as_array()


class _Ledger:
    def __init__(self):
        self.w = {}

    def __call__(self, name, value, x):
        self.w.setdefault(name, _Worst()).update(value, x)

    def record(self, report, name, threshold):
        w = self.w.get(name)
        if w is None:
            report.add(name, 0.0, threshold)
        else:
            report.add(name, w.value, threshold, w.state)


def _sample_states(system, n_states, rng):
    return [system.sampler(rng) for _ in range(n_states)]


def _filter_temperature(system, states, report, ctx_fn):
    good, bad, worst = [], 0, None
    for x in states:
        try:
            ctx_fn(system, x)
        except ZeroTemperature:
            bad += 1
            worst = x.as_array()
            continue
        good.append(x)
    report.add("temperature.floor", bad, 0, worst)
    return good


def _check_ledger(report: VerificationReport, families):
    names = report.names()
    for fam in families:
        missing = [n for n in LEDGER[fam] if names.count(n) != 1]
        if missing:
            raise RuntimeError(f"bracket family {fam!r} is missing ledger entries: {missing}")


def _gradient_audit(system, states, report):
    w = _Worst()
    for x in states:
        ga = system.H.grad(x) if isinstance(system, HamiltonianSystem) else system.h.grad(x)
        fn = system.H if isinstance(system, HamiltonianSystem) else system.h
        gf = fd_gradient(fn, x)
        w.update(np.max(np.abs(ga - gf)) / max(1.0, np.max(np.abs(ga))), x)
    report.add("gradient.fd_consistency", w.value, AUDIT_TOL, w.state)


def check_axioms(system, n_states: int = 100, n_observables: int = 20, seed: int = 0) -> VerificationReport:
    """Full degeneracy / sign / symmetry / Leibniz / bilinearity ledger at random states.

    Observables are random quadratics with coefficients in [-1, 1]; everything
    is drawn from ``numpy.random.default_rng(seed)``.
    """
    if isinstance(system, ReducedSystem):
        return _check_axioms_reduced(system, n_states, n_observables, seed)
    return _check_axioms_thermo(system, n_states, n_observables, seed)


def _check_axioms_thermo(sys: HamiltonianSystem, n_states, n_observables, seed) -> VerificationReport:
    rng = np.random.default_rng(seed)
    report = VerificationReport(seed, sys.name, meta={"gradient_mode": sys.gradient_mode, "n_states": n_states,
                                                      "n_observables": n_observables})
    obs = [random_quadratic(sys.dim, rng, f"g{i}") for i in range(n_observables)]
    coeffs = rng.uniform(-1, 1, (n_observables, 2))
    states = _filter_temperature(sys, _sample_states(sys, n_states, rng), report, thermo_context)
    n, K, D = sys.n, sys.K, sys.dim
    P = canonical_poisson(n, K).tensor(None)
    has_met = sys.linear_transport is not None
    eS = np.zeros(D)
    eS[2 * n] = 1.0
    dS = split(eS, n, K)
    L = _Ledger()
    m = len(obs)
    for x in states:
        ctx = thermo_context(sys, x)
        dHf = sys.H.grad(x)
        vals = [F(x) for F in obs]
        gf = [F.grad(x) for F in obs]
        gs = [split(g, n, K) for g in gf]
        # reversible bracket
        L("poisson.H_S_commute", abs(dHf @ P @ eS), x)
        for i in range(m):
            j, k = (i + 1) % m, (i + 2) % m
            L("poisson.antisymmetry", abs(gf[i] @ P @ gf[j] + gf[j] @ P @ gf[i]), x)
            L("poisson.G_S_commute", abs(gf[i] @ P @ eS), x)
            dprod = vals[i] * gf[j] + vals[j] * gf[i]
            L("poisson.leibniz", abs(dprod @ P @ gf[k] - vals[i] * (gf[j] @ P @ gf[k]) - vals[j] * (gf[i] @ P @ gf[k])), x)
        # single generator
        sH = single_grad(ctx, ctx.dH)
        L("single.H_H", abs(sH), x)
        sS = single_grad(ctx, dS)
        L("single.S_H_sign", -sS, x)
        single_vals = [single_grad(ctx, g) for g in gs]
        for i in range(m):
            j, k = (i + 1) % m, (i + 2) % m
            prod = split(vals[i] * gf[j] + vals[j] * gf[i], n, K)
            L("single.leibniz", abs(single_grad(ctx, prod) - vals[i] * single_vals[j] - vals[j] * single_vals[i]), x)
            a, b = coeffs[i]
            lin = split(a * gf[i] + b * gf[j], n, K)
            L("single.bilinearity", abs(single_grad(ctx, lin) - a * single_vals[i] - b * single_vals[j]), x)
            # double generator
            L("double.F_S_equals_single", abs(double_grad(ctx, gs[i], dS) - single_vals[i]), x)
            dk = double_grad(ctx, gs[j], gs[k])
            dik = double_grad(ctx, gs[i], gs[k])
            L("double.leibniz", abs(double_grad(ctx, prod, gs[k]) - vals[i] * dk - vals[j] * dik), x)
            L("double.bilinearity", abs(double_grad(ctx, lin, gs[k]) - a * dik - b * dk), x)
            for jj in range(i + 1, m):
                L("double.symmetry", abs(double_grad(ctx, gs[i], gs[jj]) - double_grad(ctx, gs[jj], gs[i])), x)
        L("double.H_S", abs(double_grad(ctx, ctx.dH, dS)), x)
        L("double.S_S_sign", -double_grad(ctx, dS, dS), x)
        if has_met:
            lam, Gmat = _transport(sys, x)
            sigma = -(_drive_dH(ctx)) / ctx.T
            L("met.S_S_equals_entropy_rate", abs(metriplectic_grad(ctx, lam, Gmat, dS, dS) - sigma), x)
            for i in range(m):
                L("met.H_G", abs(metriplectic_grad(ctx, lam, Gmat, ctx.dH, gs[i])), x)
                L("met.G_G_sign", -metriplectic_grad(ctx, lam, Gmat, gs[i], gs[i]), x)
                j = (i + 1) % m
                L("met.symmetry", abs(metriplectic_grad(ctx, lam, Gmat, gs[i], gs[j])
                                      - metriplectic_grad(ctx, lam, Gmat, gs[j], gs[i])), x)
    families = ["poisson", "single", "double"] + (["met"] if has_met else [])
    for fam in families:
        for name in LEDGER[fam]:
            L.record(report, name, _threshold(name))
    adm = admissibility_audit(sys, states, TOL["admissibility"])
    report.add("admissibility.friction", adm.max_friction_power, TOL["admissibility"], adm.worst_state)
    report.add("admissibility.flux", adm.max_flux_power, TOL["admissibility"], adm.worst_state)
    if adm.min_transport_eigenvalue is not None:
        report.add("admissibility.transport", -adm.min_transport_eigenvalue, TOL["admissibility"], adm.worst_state)
    _gradient_audit(sys, states, report)
    _check_ledger(report, families)
    return report


def _drive_dH(ctx) -> float:
    from .systems import flux_pairing

    return float(ctx.F @ ctx.dH.p) + flux_pairing(ctx.J, ctx.dH.N)


def _threshold(name: str) -> float:
    if name.endswith("_sign"):
        return TOL["sign_met"] if name.startswith(("met.", "red_met.", "orbit_met.")) else TOL["sign"]
    if name.endswith("symmetry") and not name.endswith("antisymmetry"):
        if name.startswith("orbit_met."):
            return TOL["symmetry_orbit"]
        if name.startswith(("met.", "red_met.")):
            return TOL["symmetry_met"]
        return TOL["symmetry"]
    if name.endswith("leibniz"):
        return TOL["leibniz"]
    if name.endswith("bilinearity"):
        return TOL["bilinearity"]
    if name.endswith(("equals_single", "equals_entropy_rate")):
        return TOL["identity"]
    return TOL["degeneracy"]


def _check_axioms_reduced(rs: ReducedSystem, n_states, n_observables, seed) -> VerificationReport:
    rng = np.random.default_rng(seed)
    report = VerificationReport(seed, rs.name, meta={"gradient_mode": rs.gradient_mode, "n_states": n_states,
                                                     "n_observables": n_observables})
    obs = [random_quadratic(rs.dim, rng, f"g{i}") for i in range(n_observables)]
    coeffs = rng.uniform(-1, 1, (n_observables, 2))
    states = _filter_temperature(rs, _sample_states(rs, n_states, rng), report, reduced_context)
    d, mdim, D = rs.alg.dim, rs.m, rs.dim
    lp = lie_poisson_structure(rs)
    eS = np.zeros(D)
    eS[-1] = 1.0
    dS = rsplit(eS, d, mdim)
    has_met = rs.gamma_map is not None
    has_orbit = rs.double_bracket
    L = _Ledger()
    m = len(obs)
    worst_adm, worst_adm_state = _Worst(), None
    worst_gamma = _Worst() if has_met else None
    for x in states:
        ctx = reduced_context(rs, x)
        P = lp.tensor(x)
        dhf = rs.h.grad(x)
        vals = [F(x) for F in obs]
        gf = [F.grad(x) for F in obs]
        gs = [rsplit(g, d, mdim) for g in gf]
        L("lp.h_S_commute", abs(dhf @ P @ eS), x)
        for i in range(m):
            j, k = (i + 1) % m, (i + 2) % m
            L("lp.antisymmetry", abs(gf[i] @ P @ gf[j] + gf[j] @ P @ gf[i]), x)
            dprod = vals[i] * gf[j] + vals[j] * gf[i]
            L("lp.leibniz", abs(dprod @ P @ gf[k] - vals[i] * (gf[j] @ P @ gf[k]) - vals[j] * (gf[i] @ P @ gf[k])), x)
            for c in rs.casimirs:
                L("lp.casimir", abs(c.grad(x) @ P @ gf[i]), x)
        L("red_single.h_h", abs(reduced_single_grad(ctx, ctx.dh)), x)
        L("red_single.S_h_sign", -reduced_single_grad(ctx, dS), x)
        single_vals = [reduced_single_grad(ctx, g) for g in gs]
        for i in range(m):
            j, k = (i + 1) % m, (i + 2) % m
            prod = rsplit(vals[i] * gf[j] + vals[j] * gf[i], d, mdim)
            L("red_single.leibniz",
              abs(reduced_single_grad(ctx, prod) - vals[i] * single_vals[j] - vals[j] * single_vals[i]), x)
            a, b = coeffs[i]
            lin = rsplit(a * gf[i] + b * gf[j], d, mdim)
            L("red_single.bilinearity", abs(reduced_single_grad(ctx, lin) - a * single_vals[i] - b * single_vals[j]), x)
            L("red_double.f_S_equals_single", abs(reduced_double_grad(ctx, gs[i], dS) - single_vals[i]), x)
            dk = reduced_double_grad(ctx, gs[j], gs[k])
            dik = reduced_double_grad(ctx, gs[i], gs[k])
            L("red_double.leibniz", abs(reduced_double_grad(ctx, prod, gs[k]) - vals[i] * dk - vals[j] * dik), x)
            L("red_double.bilinearity", abs(reduced_double_grad(ctx, lin, gs[k]) - a * dik - b * dk), x)
            for jj in range(i + 1, m):
                L("red_double.symmetry",
                  abs(reduced_double_grad(ctx, gs[i], gs[jj]) - reduced_double_grad(ctx, gs[jj], gs[i])), x)
        L("red_double.h_S", abs(reduced_double_grad(ctx, ctx.dh, dS)), x)
        L("red_double.S_S_sign", -reduced_double_grad(ctx, dS, dS), x)
        sigma = -float(ctx.f @ ctx.dh.mu) / ctx.T
        if has_met:
            gamma = np.asarray(rs.gamma_map(x.n, x.S), dtype=float)
            L("red_met.S_S_equals_entropy_rate", abs(reduced_metriplectic_grad(ctx, gamma, dS, dS) - sigma), x)
            for i in range(m):
                j = (i + 1) % m
                L("red_met.h_g", abs(reduced_metriplectic_grad(ctx, gamma, ctx.dh, gs[i])), x)
                L("red_met.g_g_sign", -reduced_metriplectic_grad(ctx, gamma, gs[i], gs[i]), x)
                L("red_met.symmetry", abs(reduced_metriplectic_grad(ctx, gamma, gs[i], gs[j])
                                          - reduced_metriplectic_grad(ctx, gamma, gs[j], gs[i])), x)
            worst_gamma.update(-np.min(np.linalg.eigvalsh(0.5 * (gamma + gamma.T))), x)
        if has_orbit:
            alg, mu = rs.alg, x.mu
            L("orbit_met.S_S_equals_entropy_rate", abs(orbit_metriplectic_grad(alg, mu, ctx, dS, dS) - sigma), x)
            for i in range(m):
                j = (i + 1) % m
                L("orbit_met.h_g", max(abs(orbit_metriplectic_grad(alg, mu, ctx, ctx.dh, gs[i])),
                                       abs(orbit_metriplectic_grad(alg, mu, ctx, gs[i], ctx.dh))), x)
                L("orbit_met.g_g_sign", -orbit_metriplectic_grad(alg, mu, ctx, gs[i], gs[i]), x)
                L("orbit_met.symmetry", abs(orbit_metriplectic_grad(alg, mu, ctx, gs[i], gs[j])
                                            - orbit_metriplectic_grad(alg, mu, ctx, gs[j], gs[i])), x)
            for c in rs.casimirs:
                L("double_bracket.casimir_orthogonality", abs(c.grad(x)[:d] @ ctx.f), x)
        worst_adm.update(float(ctx.f @ ctx.dh.mu), x)
    families = ["lp", "red_single", "red_double"] + (["red_met"] if has_met else []) + (["orbit_met"] if has_orbit else [])
    for fam in families:
        for name in LEDGER[fam]:
            L.record(report, name, _threshold(name))
    if rs.casimirs:
        L.record(report, "lp.casimir", TOL["degeneracy"])
        if has_orbit:
            L.record(report, "double_bracket.casimir_orthogonality", TOL["sign"])
    report.add("admissibility.reduced_friction", worst_adm.value if states else 0.0, TOL["admissibility"],
               worst_adm.state)
    if has_met:
        report.add("admissibility.reduced_transport", worst_gamma.value, TOL["admissibility"], worst_gamma.state)
    _gradient_audit(rs, states, report)
    _check_ledger(report, families)
    return report


def check_equivalence(system, n_states: int = 100, seed: int = 0, tol: Optional[float] = None) -> VerificationReport:
    """Max componentwise discrepancy between the direct field and each assembled bracket field."""
    rng = np.random.default_rng(seed)
    if tol is None:
        tol = TOL["equivalence"] if system.gradient_mode == "analytic" else TOL["equivalence_fd"]
    report = VerificationReport(seed, system.name, meta={"gradient_mode": system.gradient_mode})
    states = [system.sampler(rng) for _ in range(n_states)]
    L = _Ledger()
    if isinstance(system, ReducedSystem):
        rs = system
        names = ["equivalence.reduced_single", "equivalence.reduced_double"]
        if rs.gamma_map is not None:
            names.append("equivalence.reduced_metriplectic")
        if rs.double_bracket:
            names.append("equivalence.orbit_metriplectic")
        for x in states:
            try:
                direct = reduced_vector_field(rs, x)
            except ZeroTemperature:
                for nm in names:
                    L(nm, np.inf, x)
                continue
            X = reduced_hamiltonian_field(rs, x)
            L("equivalence.reduced_single", np.max(np.abs(direct - X - reduced_dissipative_field_single(rs, x))), x)
            dbl = reduced_dissipative_field_double(rs, x)
            L("equivalence.reduced_double", np.max(np.abs(direct - X - dbl.field)), x)
            L("equivalence.double_K_symmetry", dbl.symmetry_defect, x)
            if rs.gamma_map is not None:
                L("equivalence.reduced_metriplectic",
                  np.max(np.abs(direct - X - reduced_dissipative_field_metriplectic(rs, x).field)), x)
            if rs.double_bracket:
                L("equivalence.orbit_metriplectic", np.max(np.abs(direct - X - orbit_dissipative_field(rs, x).field)), x)
    else:
        sys = system
        names = ["equivalence.single", "equivalence.double"]
        if sys.linear_transport is not None:
            names.append("equivalence.metriplectic")
        for x in states:
            try:
                direct = direct_vector_field(sys, x, external=False)
            except ZeroTemperature:
                for nm in names:
                    L(nm, np.inf, x)
                continue
            X = hamiltonian_field(sys, x)
            L("equivalence.single", np.max(np.abs(direct - X - dissipative_field_single(sys, x))), x)
            dbl = dissipative_field_double(sys, x)
            L("equivalence.double", np.max(np.abs(direct - X - dbl.field)), x)
            L("equivalence.double_K_symmetry", dbl.symmetry_defect, x)
            if sys.linear_transport is not None:
                L("equivalence.metriplectic", np.max(np.abs(direct - X - dissipative_field_metriplectic(sys, x).field)), x)
    for nm in names:
        L.record(report, nm, tol)
    L.record(report, "equivalence.double_K_symmetry", TOL["symmetry"])
    return report


def jacobi_residual(poisson, point, seed: int = 0, n_triples: int = 20) -> float:
    """Max |{{f,g},k} + {{g,k},f} + {{k,f},g}| over random quadratic triples at ``point``.

    The outer brackets differentiate the inner bracket by central differences.
    """
    rng = np.random.default_rng(seed)
    dim = point.as_array().size
    worst = 0.0
    for _ in range(n_triples):
        f, g, k = (random_quadratic(dim, rng) for _ in range(3))
        total = 0.0
        for a, b, c in ((f, g, k), (g, k, f), (k, f, g)):
            inner = fd_gradient(lambda y: poisson.evaluate(a, b, y), point)
            total += poisson.bracket_grad(inner, c.grad(point), point)
        worst = max(worst, abs(total))
    return worst


def check_jacobi(system, n_points: int = 5, seed: int = 0, n_triples: int = 20) -> VerificationReport:
    rng = np.random.default_rng(seed)
    poisson = lie_poisson_structure(system) if isinstance(system, ReducedSystem) else canonical_poisson(system.n, system.K)
    report = VerificationReport(seed, system.name)
    w = _Worst()
    for i in range(n_points):
        x = system.sampler(rng)
        w.update(jacobi_residual(poisson, x, seed=seed + i, n_triples=n_triples), x)
    report.add("jacobi.poisson", w.value, TOL["jacobi"], w.state)
    return report


def check_laws(traj: Trajectory, tol_energy: float = TOL["energy"], tol_entropy: float = TOL["entropy"],
               tol_mass: float = TOL["mass"], seed: int = 0, system: str = "") -> VerificationReport:
    """First law, second law and mole conservation along a recorded trajectory."""
    report = VerificationReport(seed, system)
    key = "H" if "H" in traj.diagnostics else "h"
    E = np.asarray(traj.diagnostics[key], dtype=float)
    drift = np.abs(E - E[0]) / max(1.0, abs(E[0]))
    i = int(np.argmax(drift))
    report.add("laws.energy_drift", drift[i], tol_energy, traj.states[i])
    S = np.asarray(traj.diagnostics["S"], dtype=float)
    if len(S) > 1:
        dS = np.diff(S)
        i = int(np.argmin(dS))
        report.add("laws.entropy_monotone", -dS[i], tol_entropy, traj.states[i + 1])
    else:
        report.add("laws.entropy_monotone", 0.0, tol_entropy)
    if "totalN" in traj.diagnostics and np.asarray(traj.diagnostics.get("mu")).size:
        tot = np.asarray(traj.diagnostics["totalN"], dtype=float)
        md = np.abs(tot - tot[0])
        i = int(np.argmax(md))
        report.add("laws.mass_drift", md[i], tol_mass, traj.states[i])
    return report


def check_casimirs(traj: Trajectory, casimirs, preserved: bool = True, seed: int = 0,
                   system: str = "") -> VerificationReport:
    """Orbit preservation (drift <= tol) or, for ``preserved=False``, a decrease of at least the decay margin."""
    report = VerificationReport(seed, system)
    if not casimirs:
        return report
    if preserved:
        report.add("casimir.drift", max(casimir_drift(traj, casimirs)), TOL["casimir"])
    else:
        decrease = min(
            c(traj.state(0)) - min(c(traj.state(i)) for i in range(len(traj))) for c in casimirs
        )
        report.add("casimir.decay", -decrease, -TOL["casimir_decay"])
    return report
