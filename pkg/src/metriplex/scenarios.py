"""Built-in parameterized example systems with known analytic behavior."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidParameter, UnknownScenario
from .reduction import ReducedState, ReducedSystem, half_norm_squared, so3
from .systems import HamiltonianSystem, LinearTransport, Observable, ThermoMechState


@dataclass
class ScenarioSpec:
    """A built scenario: the system, its initial state and the recommended integration."""

    name: str
    params: dict
    system: Union[HamiltonianSystem, ReducedSystem]
    initial_state: Union[ThermoMechState, ReducedState]
    h: float
    t_end: float
    expected_checks: list = field(default_factory=list)
    casimirs_preserved: Optional[bool] = None
    sabotaged: bool = False

    @property
    def kind(self) -> str:
        return "reduced" if isinstance(self.system, ReducedSystem) else "thermo"


# --- parameter handling -------------------------------------------------------

def _merge(name: str, defaults: dict, params: Optional[dict], extra_keys=()) -> dict:
    params = dict(params or {})
    out = dict(defaults)
    for key, value in params.items():
        if key not in defaults and key not in extra_keys:
            raise InvalidParameter(f"{name}: unknown parameter {key!r}; known: {sorted(defaults)}")
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise InvalidParameter(f"{name}: parameter {key!r} must be a number, got {value!r}") from None
        if not np.isfinite(value):
            raise InvalidParameter(f"{name}: parameter {key!r} must be finite")
        out[key] = value
    return out


def _require(cond: bool, msg: str):
    if not cond:
        raise InvalidParameter(msg)


# --- damped thermal oscillator ------------------------------------------------

OSCILLATOR_DEFAULTS = {
    "m": 1.0, "k": 1.0, "lam": 0.2, "alpha": 1.0, "nonlinear_entropy": 0.0,
    "q0": 1.0, "p0": 0.0, "S0": 0.0,
}


def _oscillator(params, sabotage):
    P = _merge("damped_oscillator_thermal", OSCILLATOR_DEFAULTS, params)
    m, k, lam, alpha = P["m"], P["k"], P["lam"], P["alpha"]
    _require(m > 0, "m must be > 0")
    _require(k >= 0, "k must be >= 0")
    _require(lam >= 0, "lam must be >= 0")
    _require(alpha > 0, "alpha must be > 0")
    _require(P["nonlinear_entropy"] in (0.0, 1.0), "nonlinear_entropy must be 0 or 1")
    nonlinear = P["nonlinear_entropy"] == 1.0

    def value(x):
        U = alpha * np.exp(x.S) if nonlinear else alpha * x.S
        return float(x.p[0] ** 2 / (2 * m) + 0.5 * k * x.q[0] ** 2 + U)

    def grad(x):
        T = alpha * np.exp(x.S) if nonlinear else alpha
        return np.array([k * x.q[0], x.p[0] / m, T])

    sign = -1.0 if sabotage else 1.0
    lt = LinearTransport(lambda q, S: np.array([[sign * lam]]))
    sys = HamiltonianSystem(1, 0, Observable(value, grad, "H"), linear_transport=lt,
                            name="damped_oscillator_thermal")
    x0 = ThermoMechState([P["q0"]], [P["p0"]], P["S0"])
    return P, sys, x0, 1e-3, 10.0, None


# --- compartment diffusion ------------------------------------------------------

def _compartment(params, sabotage):
    params = dict(params or {})
    try:
        K = int(float(params.get("K", 2)))
    except (TypeError, ValueError):
        raise InvalidParameter("K must be an integer") from None
    _require(K >= 2 and float(params.get("K", 2)) == K, "K must be an integer >= 2")
    defaults = {"K": 2.0, "alpha": 1.0, "c": 1.0, "G": 1.0, "S0": 0.0}
    per = {}
    for i in range(1, K + 1):
        per[f"c{i}"] = None
        per[f"N{i}"] = 2.0 if i == 1 else 0.0
    for i in range(1, K + 1):
        for j in range(i + 1, K + 1):
            per[f"G{i}_{j}"] = None
    P = _merge("compartment_diffusion", {**defaults, **{k: v for k, v in per.items() if v is not None}}, params,
               extra_keys=[k for k, v in per.items() if v is None])
    P["K"] = float(K)
    alpha = P["alpha"]
    _require(alpha > 0, "alpha must be > 0")
    c = np.array([P.get(f"c{i}", P["c"]) for i in range(1, K + 1)])
    _require(bool(np.all(c > 0)), "compartment stiffnesses c must be > 0")
    G = np.zeros((K, K))
    for i in range(K):
        for j in range(i + 1, K):
            G[i, j] = G[j, i] = P.get(f"G{i + 1}_{j + 1}", P["G"])
    _require(bool(np.all(G >= 0)), "transport coefficients G must be >= 0")
    N0 = np.array([P[f"N{i}"] for i in range(1, K + 1)])
    _require(bool(np.all(N0 >= 0)), "initial mole numbers must be >= 0")

    def value(x):
        return float(alpha * x.S + 0.5 * np.sum(c * x.N ** 2))

    def grad(x):
        return np.concatenate([[0.0, 0.0, alpha], c * x.N])

    Gs = -G if sabotage else G
    lt = LinearTransport(lambda q, S: np.zeros((1, 1)), lambda S, N: Gs)
    sys = HamiltonianSystem(1, K, Observable(value, grad, "H"), linear_transport=lt, name="compartment_diffusion")
    x0 = ThermoMechState([0.0], [0.0], P["S0"], N0)
    return P, sys, x0, 1e-3, 5.0, None


# --- rigid bodies ---------------------------------------------------------------

RIGID_DEFAULTS = {
    "I1": 1.0, "I2": 2.0, "I3": 3.0, "alpha": 1.0,
    "gamma1": 0.1, "gamma2": 0.1, "gamma3": 0.1,
    "mu1": 1.0, "mu2": 0.0, "mu3": 0.2, "S0": 0.0,
}


def _rigid_energy(I, alpha) -> Observable:
    def value(x):
        return float(0.5 * np.sum(x.mu ** 2 / I) + alpha * x.S)

    def grad(x):
        return np.concatenate([x.mu / I, [alpha]])

    return Observable(value, grad, "h")


def _rigid_common(name, params, defaults):
    P = _merge(name, defaults, params)
    I = np.array([P["I1"], P["I2"], P["I3"]])
    gamma = np.array([P["gamma1"], P["gamma2"], P["gamma3"]])
    _require(bool(np.all(I > 0)), "moments of inertia must be > 0")
    _require(P["alpha"] > 0, "alpha must be > 0")
    mu0 = np.array([P["mu1"], P["mu2"], P["mu3"]])
    _require(bool(np.linalg.norm(mu0) > 0), "initial momentum must be nonzero")
    return P, I, gamma, mu0 / np.linalg.norm(mu0)


def _rigid_linear(params, sabotage):
    P, I, gamma, mu0 = _rigid_common("rigid_body_linear_friction", params, RIGID_DEFAULTS)
    _require(bool(np.all(gamma >= 0)), "friction coefficients gamma must be >= 0")
    g = np.diag(-gamma if sabotage else gamma)
    rs = ReducedSystem(so3(), _rigid_energy(I, P["alpha"]), gamma_map=lambda n, S: g,
                       casimirs=(half_norm_squared(3),), name="rigid_body_linear_friction")
    return P, rs, ReducedState(mu0, (), P["S0"]), 1e-3, 10.0, False


DOUBLE_BRACKET_DEFAULTS = {**RIGID_DEFAULTS, "gamma1": 1.0, "gamma2": 1.0, "gamma3": 1.0}


def _rigid_double(params, sabotage):
    P, I, gamma, mu0 = _rigid_common("rigid_body_double_bracket", params, DOUBLE_BRACKET_DEFAULTS)
    _require(bool(np.all(gamma > 0)), "algebra metric gamma must be positive definite")
    rs = ReducedSystem(so3(np.diag(gamma)), _rigid_energy(I, P["alpha"]), double_bracket=True,
                       orbit_friction_scale=-1.0 if sabotage else 1.0,
                       casimirs=(half_norm_squared(3),), name="rigid_body_double_bracket")
    return P, rs, ReducedState(mu0, (), P["S0"]), 1e-3, 10.0, True


_BUILDERS = {
    "damped_oscillator_thermal": (_oscillator, "1-dof oscillator, linear friction, heat into S; H = p^2/2m + kq^2/2 + alpha S"),
    "compartment_diffusion": (_compartment, "K compartments exchanging matter with linear fluxes; H = alpha S + sum c_k N_k^2 / 2"),
    "rigid_body_linear_friction": (_rigid_linear, "so(3) rigid body with friction -gamma Omega; orbits not preserved"),
    "rigid_body_double_bracket": (_rigid_double, "so(3) rigid body with orbit-preserving double-bracket friction"),
}

#: default checks every scenario is expected to pass, by suite
EXPECTED_SUITES = ["laws", "axioms", "equivalence", "jacobi", "casimir"]


def scenario_names() -> list:
    return list(_BUILDERS)


def describe(name: str) -> str:
    if name not in _BUILDERS:
        raise UnknownScenario(f"unknown scenario {name!r}; available: {', '.join(_BUILDERS)}")
    return _BUILDERS[name][1]


def build(name: str, params: Optional[dict] = None, sabotage: bool = False) -> ScenarioSpec:
    """Build a named scenario with parameter overrides.

    ``sabotage=True`` flips the sign of the dissipative law (friction, fluxes or
    double-bracket force) so that second-law checks fail; used as a negative
    control.
    """
    if name not in _BUILDERS:
        raise UnknownScenario(f"unknown scenario {name!r}; available: {', '.join(_BUILDERS)}")
    P, system, x0, h, t_end, preserved = _BUILDERS[name][0](params, sabotage)
    return ScenarioSpec(name, P, system, x0, h, t_end, list(EXPECTED_SUITES), preserved, sabotage)
