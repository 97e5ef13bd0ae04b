"""Poisson structure and the three dissipation brackets on T*Q x R^{K+1}.

All brackets are evaluated from gradient blocks; the public functions take
:class:`~metriplex.systems.Observable` arguments and the ``*_grad`` helpers take
flat gradient vectors directly (used for vector-field extraction).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import MissingLinearTransport
from .systems import (
    EPS_T,
    HamiltonianSystem,
    Observable,
    ThermoContext,
    ThermoMechState,
    coordinate,
    flux_pairing,
    random_quadratic,
    split,
    thermo_context,
    upper_pairs,
)


class PoissonStructure:
    """Poisson bracket ``{F, G}(x) = dF . P(x) . dG`` given by its tensor ``P``.

    With this convention the Hamiltonian vector field is ``X_H = P dH`` and
    ``dF/dt = {F, H}``.
    """

    def __init__(self, tensor: Callable, name: str = "poisson"):
        self._tensor = tensor
        self.name = name

    def tensor(self, x) -> np.ndarray:
        return np.asarray(self._tensor(x), dtype=float)

    def bracket_grad(self, dF, dG, x) -> float:
        return float(dF @ self.tensor(x) @ dG)

    def evaluate(self, F: Observable, G: Observable, x) -> float:
        return self.bracket_grad(F.grad(x), G.grad(x), x)

    def tensor_apply(self, covector, x) -> np.ndarray:
        return self.tensor(x) @ np.asarray(covector, dtype=float)

    def __repr__(self):
        return f"PoissonStructure({self.name})"


def canonical_poisson(n: int, K: int = 0) -> PoissonStructure:
    """Canonical bracket on T*Q plus the zero bracket on the (S, N) block."""
    if n < 1:
        raise ValueError("n must be >= 1")
    D = 2 * n + 1 + K
    P = np.zeros((D, D))
    P[:n, n:2 * n] = np.eye(n)
    P[n:2 * n, :n] = -np.eye(n)
    P.setflags(write=False)
    return PoissonStructure(lambda x: P, f"canonical(n={n}, K={K})")


def hamiltonian_field(sys: HamiltonianSystem, x: ThermoMechState) -> np.ndarray:
    return canonical_poisson(sys.n, sys.K).tensor_apply(sys.H.grad(x), x)


# --- gradient-level kernels -------------------------------------------------

def _drive(ctx: ThermoContext, f) -> float:
    """<F^fr, f_p> + sum_{k<l} J^{l->k}(f_{N_k} - f_{N_l})."""
    return float(ctx.F @ f.p) + flux_pairing(ctx.J, f.N)


def single_grad(ctx: ThermoContext, f) -> float:
    return _drive(ctx, f) - (f.S / ctx.T) * _drive(ctx, ctx.dH)


def double_grad(ctx: ThermoContext, f, g) -> float:
    return (
        float(ctx.F @ f.p) * g.S + float(ctx.F @ g.p) * f.S
        + flux_pairing(ctx.J, f.N) * g.S + flux_pairing(ctx.J, g.N) * f.S
        - _drive(ctx, ctx.dH) / ctx.T * f.S * g.S
    )


def _transport(sys: HamiltonianSystem, x: ThermoMechState):
    lt = sys.linear_transport
    if lt is None:
        raise MissingLinearTransport(f"{sys.name}: metriplectic bracket needs linear transport laws")
    lam = np.asarray(lt.lam(x.q, x.S), dtype=float).reshape(sys.n, sys.n)
    if sys.K and lt.G is not None:
        G = np.asarray(lt.G(x.S, x.N), dtype=float)
    else:
        G = np.zeros((sys.K, sys.K))
    return lam, G


def metriplectic_grad(ctx: ThermoContext, lam, Gmat, f, g) -> float:
    T, dH = ctx.T, ctx.dH
    A_f = f.p * T - dH.p * f.S
    A_g = g.p * T - dH.p * g.S
    k, l = upper_pairs(Gmat.shape[0])
    dHN = dH.N[k] - dH.N[l]
    B_f = (f.N[k] - f.N[l]) * T - dHN * f.S
    B_g = (g.N[k] - g.N[l]) * T - dHN * g.S
    return float(A_f @ lam @ A_g) / T + float(np.sum(Gmat[k, l] * B_f * B_g)) / T


# --- public brackets ----------------------------------------------------------

def _blocks(sys, F: Observable, x):
    return split(F.grad(x), sys.n, sys.K)


def single_generator_bracket(sys: HamiltonianSystem, F: Observable, x: ThermoMechState,
                             eps_T: float = EPS_T) -> float:
    """Dissipation bracket [F, H] generated by the Hamiltonian alone."""
    return single_grad(thermo_context(sys, x, eps_T), _blocks(sys, F, x))


def double_generator_bracket(sys: HamiltonianSystem, F: Observable, G: Observable, x: ThermoMechState,
                             eps_T: float = EPS_T) -> float:
    """Symmetric dissipation bracket (F, G); (F, S) reproduces [F, H]."""
    ctx = thermo_context(sys, x, eps_T)
    return double_grad(ctx, _blocks(sys, F, x), _blocks(sys, G, x))


def metriplectic_bracket(sys: HamiltonianSystem, F: Observable, G: Observable, x: ThermoMechState,
                         eps_T: float = EPS_T) -> float:
    """Metriplectic bracket (F, G)_met; requires declared linear transport laws."""
    lam, Gmat = _transport(sys, x)
    ctx = thermo_context(sys, x, eps_T)
    return metriplectic_grad(ctx, lam, Gmat, _blocks(sys, F, x), _blocks(sys, G, x))


# --- vector fields ----------------------------------------------------------

def _basis(sys):
    eye = np.eye(sys.dim)
    return [split(e, sys.n, sys.K) for e in eye]


def _entropy_covector(sys) -> np.ndarray:
    dS = np.zeros(sys.dim)
    dS[2 * sys.n] = 1.0
    return dS


def dissipative_field_single(sys: HamiltonianSystem, x: ThermoMechState, eps_T: float = EPS_T) -> np.ndarray:
    """D_H with components [x_i, H] on the coordinate observables."""
    ctx = thermo_context(sys, x, eps_T)
    return np.array([single_grad(ctx, e) for e in _basis(sys)])


class SymmetricField(NamedTuple):
    field: np.ndarray
    matrix: np.ndarray
    symmetry_defect: float


def _assemble(kernel, basis, dS) -> SymmetricField:
    D = len(basis)
    Kmat = np.empty((D, D))
    for i in range(D):
        for j in range(D):
            Kmat[i, j] = kernel(basis[i], basis[j])
    defect = float(np.max(np.abs(Kmat - Kmat.T))) if D else 0.0
    return SymmetricField(Kmat @ dS, Kmat, defect)


def dissipative_field_double(sys: HamiltonianSystem, x: ThermoMechState, eps_T: float = EPS_T) -> SymmetricField:
    """K dS with K_ij = (x_i, x_j), plus the audited symmetry defect of K."""
    ctx = thermo_context(sys, x, eps_T)
    return _assemble(lambda f, g: double_grad(ctx, f, g), _basis(sys), _entropy_covector(sys))


def dissipative_field_metriplectic(sys: HamiltonianSystem, x: ThermoMechState,
                                   eps_T: float = EPS_T) -> SymmetricField:
    lam, Gmat = _transport(sys, x)
    ctx = thermo_context(sys, x, eps_T)
    return _assemble(lambda f, g: metriplectic_grad(ctx, lam, Gmat, f, g), _basis(sys), _entropy_covector(sys))


# --- compact bracket report ---------------------------------------------------

@dataclass
class DissipationBracketReport:
    """Sampled extremes of the bracket axioms (see :func:`bracket_report`)."""

    seed: int
    single_HH: float
    single_SH_min: float
    double_symmetry_defect: float
    double_HS: float
    double_SS_min: float
    met_HG_max: float | None = None
    met_GG_min: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def bracket_report(sys: HamiltonianSystem, n_states: int = 20, n_observables: int = 5,
                   seed: int = 0) -> DissipationBracketReport:
    rng = np.random.default_rng(seed)
    S = coordinate(2 * sys.n, "S")
    obs = [random_quadratic(sys.dim, rng) for _ in range(n_observables)]
    states = [sys.sampler(rng) for _ in range(n_states)]
    hh, sh, sym, hs, ss = 0.0, np.inf, 0.0, 0.0, np.inf
    hg, gg = (0.0, np.inf) if sys.linear_transport is not None else (None, None)
    for x in states:
        hh = max(hh, abs(single_generator_bracket(sys, sys.H, x)))
        sh = min(sh, single_generator_bracket(sys, S, x))
        hs = max(hs, abs(double_generator_bracket(sys, sys.H, S, x)))
        ss = min(ss, double_generator_bracket(sys, S, S, x))
        for F in obs:
            for G in obs:
                sym = max(sym, abs(double_generator_bracket(sys, F, G, x) - double_generator_bracket(sys, G, F, x)))
            if hg is not None:
                hg = max(hg, abs(metriplectic_bracket(sys, sys.H, F, x)))
                gg = min(gg, metriplectic_bracket(sys, F, F, x))
    return DissipationBracketReport(seed, hh, sh, sym, hs, ss, hg, gg)
