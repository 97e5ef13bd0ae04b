"""Direct time evolution, trajectories and thermodynamic diagnostics."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DivergedAt, NegativeMoles, ZeroTemperature
from .systems import EPS_T, HamiltonianSystem, ThermoMechState, flux_pairing, thermo_context


def direct_vector_field(sys: HamiltonianSystem, x: ThermoMechState, external: bool = True,
                        eps_T: float = EPS_T) -> np.ndarray:
    """Flat tangent (qdot, pdot, Sdot, Ndot) of the evolution equations in H-form."""
    ctx = thermo_context(sys, x, eps_T)
    dH, T, F, J = ctx
    pdot = -dH.q + F
    if external and sys.external_force is not None:
        pdot = pdot + np.asarray(sys.external_force(x.q, dH.p, x.S), dtype=float)
    Sdot = -(F @ dH.p + flux_pairing(J, dH.N)) / T
    Ndot = J.sum(axis=1)
    return np.concatenate([dH.p, pdot, [Sdot], Ndot])


def entropy_production_rate(sys: HamiltonianSystem, x: ThermoMechState, eps_T: float = EPS_T) -> float:
    """Sdot = -(1/T)<F^fr, qdot> - (1/T) sum_{k<l} J^{l->k}(mu^k - mu^l)."""
    dH, T, F, J = thermo_context(sys, x, eps_T)
    return -(F @ dH.p) / T - flux_pairing(J, dH.N) / T


@dataclass
class Trajectory:
    """Recorded samples of an integration.

    ``states`` holds flat state vectors row by row; ``diagnostics`` maps a name to
    a per-sample array (1-D, or 2-D with one column per component).
    """

    times: np.ndarray
    states: np.ndarray
    template: object
    labels: list
    diagnostics: dict = field(default_factory=dict)
    csv_diagnostics: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def state(self, i: int):
        return self.template.with_array(self.states[i])

    def column(self, label: str) -> np.ndarray:
        return self.states[:, self.labels.index(label)]

    def csv_header(self) -> list:
        header = ["t", *self.labels]
        for key in self.csv_diagnostics:
            arr = np.asarray(self.diagnostics[key])
            if arr.ndim == 1:
                header.append(key)
            else:
                header.extend(f"{key}_{j + 1}" for j in range(arr.shape[1]))
        return header

    def csv_rows(self):
        blocks = [self.times[:, None], self.states]
        for key in self.csv_diagnostics:
            arr = np.asarray(self.diagnostics[key], dtype=float)
            blocks.append(arr.reshape(len(self.times), -1))
        return np.hstack(blocks)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.csv_header())
            for row in self.csv_rows():
                w.writerow([repr(float(v) + 0.0) for v in row])


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field: Callable, x0, t_end: float, h: float, stride: int = 1,
              diagnostics: Optional[Callable] = None, accumulate: Optional[Callable] = None,
              labels: Optional[list] = None, mole_slice: Optional[slice] = None,
              on_negative_moles: str = "warn") -> Trajectory:
    """Classical fixed-step RK4 from t=0 to ``t_end``.

    ``field`` maps a state object to a flat tangent. Steps are uniform except a
    final shorter step landing exactly on ``t_end``. Samples are recorded every
    ``stride`` steps and at the end. ``diagnostics(state) -> dict`` is evaluated
    at recorded samples; ``accumulate(state) -> array`` is integrated in time by
    the trapezoidal rule at every step and recorded as ``"W"`` (zero at t=0).
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if on_negative_moles not in ("ignore", "warn", "abort"):
        raise ValueError("on_negative_moles must be 'ignore', 'warn' or 'abort'")

    t = 0.0

    def f(y):
        if not np.all(np.isfinite(y)):
            raise DivergedAt(t)
        try:
            return field(x0.with_array(y))
        except ZeroTemperature as exc:
            exc.t = t
            raise

    n_full = int(np.floor(t_end / h + 1e-9))
    steps = [h] * n_full
    rest = t_end - n_full * h
    if rest > 1e-12 * max(1.0, t_end):
        steps.append(rest)

    y = x0.as_array()
    times, states, diags, Ws = [0.0], [y.copy()], [], []
    if diagnostics is not None:
        diags.append(diagnostics(x0))
    if accumulate is not None:
        a_prev = np.asarray(accumulate(x0), dtype=float)
        W = np.zeros_like(a_prev)
        Ws.append(W.copy())
    warned = False
    for i, dt in enumerate(steps, start=1):
        with np.errstate(over="ignore", invalid="ignore"):
            y = _rk4_step(f, y, dt)
        t = t_end if i > n_full else i * h
        if not np.all(np.isfinite(y)):
            raise DivergedAt(t)
        if mole_slice is not None and on_negative_moles != "ignore":
            neg = np.flatnonzero(y[mole_slice] < 0)
            if neg.size:
                if on_negative_moles == "abort":
                    raise NegativeMoles(t, int(neg[0]))
                if not warned:
                    warnings.warn(f"mole number N_{neg[0] + 1} crossed zero at t={t:.6g}", RuntimeWarning)
                    warned = True
        x = x0.with_array(y)
        if accumulate is not None:
            a_new = np.asarray(accumulate(x), dtype=float)
            W = W + 0.5 * dt * (a_prev + a_new)
            a_prev = a_new
        if i % stride == 0 or i == len(steps):
            times.append(t)
            states.append(y.copy())
            if diagnostics is not None:
                diags.append(diagnostics(x))
            if accumulate is not None:
                Ws.append(W.copy())

    traj = Trajectory(np.array(times), np.array(states), x0, list(labels or [f"x{j + 1}" for j in range(y.size)]))
    if diags:
        for key in diags[0]:
            traj.diagnostics[key] = np.array([d[key] for d in diags])
    if Ws:
        traj.diagnostics["W"] = np.array(Ws)
    return traj


def state_labels(n: int, K: int) -> list:
    return ([f"q_{i + 1}" for i in range(n)] + [f"p_{i + 1}" for i in range(n)] + ["S"]
            + [f"N_{k + 1}" for k in range(K)])


def thermo_diagnostics(sys: HamiltonianSystem) -> Callable:
    def diag(x: ThermoMechState) -> dict:
        ctx = thermo_context(sys, x)
        dH, T, F, J = ctx
        return {
            "H": sys.H(x),
            "S": x.S,
            "totalN": float(np.sum(x.N)),
            "sigma": -(F @ dH.p) / T - flux_pairing(J, dH.N) / T,
            "T": T,
            "mu": dH.N.copy(),
        }

    return diag


def simulate(sys: HamiltonianSystem, x0: ThermoMechState, t_end: float, h: float, stride: int = 1,
             external: bool = True, on_negative_moles: str = "warn") -> Trajectory:
    """Integrate the direct vector field of ``sys`` and record thermodynamic diagnostics."""
    n, K = sys.n, sys.K
    traj = integrate(
        lambda x: direct_vector_field(sys, x, external=external),
        x0, t_end, h, stride=stride,
        diagnostics=thermo_diagnostics(sys),
        accumulate=(lambda x: sys.H.grad(x)[2 * n + 1:]) if K else None,
        labels=state_labels(n, K),
        mole_slice=slice(2 * n + 1, 2 * n + 1 + K) if K else None,
        on_negative_moles=on_negative_moles,
    )
    if not K:
        traj.diagnostics["W"] = np.zeros((len(traj), 0))
    traj.csv_diagnostics = ["H", "T", "sigma", "W", "totalN"]
    return traj


@dataclass
class AdmissibilityReport:
    max_friction_power: float
    max_flux_power: float
    min_transport_eigenvalue: Optional[float]
    worst_state: Optional[np.ndarray]
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        ok = self.max_friction_power <= self.tol and self.max_flux_power <= self.tol
        if self.min_transport_eigenvalue is not None:
            ok = ok and self.min_transport_eigenvalue >= -self.tol
        return ok


def admissibility_audit(sys: HamiltonianSystem, states, tol: float = 1e-12) -> AdmissibilityReport:
    """Second-law audit: <F^fr, v> <= 0 and J^{l->k}(mu^k - mu^l) <= 0 on every sample.

    With linear transport declared, also reports the smallest eigenvalue of the
    symmetric part of lambda and the smallest entry of G (both must be >= 0).
    """
    fr_max, fl_max, worst, worst_val = 0.0, 0.0, None, -np.inf
    lt_min = None if sys.linear_transport is None else np.inf
    for x in states:
        dH = sys.H.grad(x)
        v = dH[sys.n:2 * sys.n]
        mu = dH[2 * sys.n + 1:]
        power = float(np.asarray(sys.friction(x.q, v, x.S)) @ v)
        fr_max = max(fr_max, power)
        val = power
        if sys.K:
            J = np.asarray(sys.flux(x.S, x.N, mu), dtype=float)
            pair = J * (mu[:, None] - mu[None, :])
            fl = float(np.max(pair))
            fl_max = max(fl_max, fl)
            val = max(val, fl)
        if lt_min is not None:
            lam = np.asarray(sys.linear_transport.lam(x.q, x.S), dtype=float)
            m = float(np.min(np.linalg.eigvalsh(0.5 * (lam + lam.T))))
            if sys.K and sys.linear_transport.G is not None:
                m = min(m, float(np.min(sys.linear_transport.G(x.S, x.N))))
            lt_min = min(lt_min, m)
            val = max(val, -m)
        if val > worst_val:
            worst_val, worst = val, x.as_array()
    return AdmissibilityReport(fr_max, fl_max, lt_min, worst, tol)
