"""Lie algebras, reduced dynamics on g* x N x R and their brackets.

The quotient space N is embedded in R^m and the infinitesimal action is given by
a generator matrix ``B(n)`` with ``xi_N(n) = B(n) xi``; the momentum map is then
``J(n, alpha) = B(n)^T alpha``. Flat layout of a :class:`ReducedState` is
``[mu (d), n (m), S]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .brackets import PoissonStructure, SymmetricField, _assemble
from .dynamics import Trajectory, integrate
from .errors import (
    DimensionMismatch,
    GradientMismatch,
    InvalidSystem,
    MissingLinearTransport,
    ZeroTemperature,
)
from .systems import AUDIT_STATES, AUDIT_TOL, EPS_T, Observable, _frozen, fd_gradient


class LieAlgebraStructure:
    """Finite-dimensional Lie algebra given by structure constants.

    ``constants[i, j, k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``. The
    duality pairing is the coordinate dot product; ``gamma`` is the inner
    product on the algebra used by the sharp map.
    """

    def __init__(self, constants, gamma=None, name: str = "lie", validate: bool = True):
        C = np.array(constants, dtype=float)
        if C.ndim != 3 or not (C.shape[0] == C.shape[1] == C.shape[2]):
            raise DimensionMismatch(f"structure constants must be d x d x d, got {C.shape}")
        self.dim = C.shape[0]
        self.constants = C
        self.constants.setflags(write=False)
        g = np.eye(self.dim) if gamma is None else np.array(gamma, dtype=float)
        if g.shape != (self.dim, self.dim):
            raise DimensionMismatch("gamma must be d x d")
        if np.max(np.abs(g - g.T)) > 1e-14 * max(1.0, np.max(np.abs(g))) or np.min(np.linalg.eigvalsh(g)) <= 0:
            raise InvalidSystem("gamma must be symmetric positive definite")
        self.gamma = g
        self.name = name
        if validate:
            if np.max(np.abs(C + C.transpose(1, 0, 2))) > 1e-12:
                raise InvalidSystem(f"{name}: bracket is not antisymmetric")
            res = self.jacobi_residual()
            if res > 1e-12:
                raise InvalidSystem(f"{name}: Jacobi identity fails on basis triples (residual {res:.2e})")

    @classmethod
    def from_bracket(cls, bracket: Callable, dim: int, **kwargs) -> "LieAlgebraStructure":
        """Convert a bracket closure to structure constants by evaluating on basis pairs."""
        eye = np.eye(dim)
        C = np.array([[np.asarray(bracket(eye[i], eye[j]), dtype=float) for j in range(dim)] for i in range(dim)])
        return cls(C, **kwargs)

    def _check(self, *vs):
        for v in vs:
            if np.shape(v) != (self.dim,):
                raise DimensionMismatch(f"expected length-{self.dim} vector, got shape {np.shape(v)}")

    def bracket(self, xi, eta) -> np.ndarray:
        self._check(xi, eta)
        return np.einsum("i,j,ijk->k", xi, eta, self.constants)

    def ad_star(self, xi, mu) -> np.ndarray:
        """Covector with <ad*_xi mu, eta> = <mu, [xi, eta]> for all eta."""
        self._check(xi, mu)
        return np.einsum("i,ijk,k->j", xi, self.constants, mu)

    def pairing(self, mu, xi) -> float:
        return float(np.dot(mu, xi))

    def inner(self, xi, eta) -> float:
        return float(xi @ self.gamma @ eta)

    def sharp(self, mu) -> np.ndarray:
        return np.linalg.solve(self.gamma, mu)

    def jacobi_residual(self) -> float:
        C = self.constants
        # [[e_i, e_j], e_k] = C_ijm C_mkl e_l
        t = np.einsum("ijm,mkl->ijkl", C, C)
        cyc = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
        return float(np.max(np.abs(cyc))) if C.size else 0.0


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


def so3(gamma=None) -> LieAlgebraStructure:
    """so(3) identified with R^3; the bracket is the cross product."""
    return LieAlgebraStructure(levi_civita(), gamma=gamma, name="so3")


def se2(gamma=None) -> LieAlgebraStructure:
    """se(2) with basis (rotation, x-translation, y-translation)."""
    C = np.zeros((3, 3, 3))
    C[0, 1, 2], C[1, 0, 2] = 1.0, -1.0
    C[0, 2, 1], C[2, 0, 1] = -1.0, 1.0
    return LieAlgebraStructure(C, gamma=gamma, name="se2")


@dataclass(frozen=True, eq=False)
class ReducedState:
    """Point (mu, n, S) of g* x N x R."""

    mu: np.ndarray
    n: np.ndarray = field(default_factory=lambda: np.zeros(0))
    S: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "n", _frozen(self.n))
        object.__setattr__(self, "S", float(self.S))
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.n)) and np.isfinite(self.S)):
            raise ValueError("state entries must be finite")

    @property
    def d(self) -> int:
        return self.mu.size

    @property
    def m(self) -> int:
        return self.n.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.mu, self.n, [self.S]])

    def with_array(self, arr) -> "ReducedState":
        return ReducedState.from_array(arr, self.d, self.m)

    @classmethod
    def from_array(cls, arr, d: int, m: int = 0) -> "ReducedState":
        arr = np.asarray(arr, dtype=float)
        if arr.size != d + m + 1:
            raise DimensionMismatch(f"expected {d + m + 1} entries, got {arr.size}")
        return cls(arr[:d], arr[d:d + m], arr[d + m])


class RSplit(NamedTuple):
    mu: np.ndarray
    n: np.ndarray
    S: float


def rsplit(vec, d: int, m: int) -> RSplit:
    vec = np.asarray(vec, dtype=float)
    return RSplit(vec[:d], vec[d:d + m], float(vec[d + m]))


def default_reduced_sampler(d: int, m: int):
    def sample(rng):
        return ReducedState(rng.normal(size=d), rng.normal(size=m), rng.normal())

    return sample


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Reduced thermodynamic system on g* x N x R.

    ``friction(xi, n, S)`` returns the reduced friction covector with
    ``xi = dh/dmu``. With ``gamma_map(n, S)`` declared and no friction given, the
    friction is the linear law ``-gamma(n, S) xi``. With ``double_bracket=True``
    the friction is the orbit-preserving double-bracket force, multiplied by
    ``orbit_friction_scale`` (1 is dissipative), and ``m`` must be 0.
    """

    alg: LieAlgebraStructure
    h: Observable
    m: int = 0
    friction: Optional[Callable] = None
    generator: Optional[Callable] = None
    casimirs: Sequence[Observable] = ()
    gamma_map: Optional[Callable] = None
    double_bracket: bool = False
    orbit_friction_scale: float = 1.0
    name: str = "reduced"
    sampler: Optional[Callable] = None
    audit: bool = True

    def __post_init__(self):
        d, m = self.alg.dim, self.m
        if self.double_bracket and m:
            raise InvalidSystem("double-bracket friction requires the full group quotient (no n variable)")
        if self.double_bracket and (self.friction is not None or self.gamma_map is not None):
            raise InvalidSystem("double-bracket friction excludes a separate friction law")
        if m and self.generator is None:
            raise InvalidSystem("a generator matrix B(n) is required when m > 0")
        if self.friction is None and self.gamma_map is not None:
            gm = self.gamma_map
            object.__setattr__(self, "friction", lambda xi, n, S: -np.asarray(gm(n, S), dtype=float) @ xi)
        object.__setattr__(self, "casimirs", tuple(self.casimirs))
        if self.sampler is None:
            object.__setattr__(self, "sampler", default_reduced_sampler(d, m))
        if self.audit:
            self._audit()

    @property
    def dim(self) -> int:
        return self.alg.dim + self.m + 1

    @property
    def gradient_mode(self) -> str:
        return self.h.gradient_mode

    def B(self, n) -> np.ndarray:
        if not self.m:
            return np.zeros((0, self.alg.dim))
        B = np.asarray(self.generator(n), dtype=float)
        if B.shape != (self.m, self.alg.dim):
            raise DimensionMismatch(f"generator must return an {self.m} x {self.alg.dim} matrix, got {B.shape}")
        return B

    def state(self, mu, n=(), S=0.0) -> ReducedState:
        x = ReducedState(mu, n, S)
        if x.d != self.alg.dim or x.m != self.m:
            raise DimensionMismatch("state dimensions do not match the system")
        return x

    def _audit(self, seed: int = 0):
        rng = np.random.default_rng(seed)
        for _ in range(AUDIT_STATES):
            x = self.sampler(rng)
            if np.size(self.h.grad(x)) != self.dim:
                raise DimensionMismatch(f"{self.name}: dh must have length {self.dim}")
            if self.h.gradient_mode == "analytic":
                ga = self.h.grad(x)
                gf = fd_gradient(self.h, x)
                err = np.max(np.abs(ga - gf)) / max(1.0, np.max(np.abs(ga)))
                if err > AUDIT_TOL:
                    raise GradientMismatch(f"{self.name}: analytic dh differs from finite differences by {err:.2e}")
            if self.gamma_map is not None:
                xi = self.h.grad(x)[:self.alg.dim]
                lin = -np.asarray(self.gamma_map(x.n, x.S), dtype=float) @ xi
                f = np.asarray(self.friction(xi, x.n, x.S), dtype=float)
                if np.max(np.abs(f - lin)) > 1e-10 * max(1.0, np.max(np.abs(lin))):
                    raise InvalidSystem(f"{self.name}: friction disagrees with the declared linear law")
            if self.m:
                self.B(x.n)


class ReducedContext(NamedTuple):
    dh: RSplit
    T: float
    f: np.ndarray
    B: np.ndarray


def double_bracket_force(alg: LieAlgebraStructure, mu, xi) -> np.ndarray:
    """ad*_{[ad*_xi mu]#} mu."""
    return alg.ad_star(alg.sharp(alg.ad_star(xi, mu)), mu)


def _friction_from(rs: ReducedSystem, x: ReducedState, dh: RSplit) -> np.ndarray:
    if rs.double_bracket:
        return rs.orbit_friction_scale * double_bracket_force(rs.alg, x.mu, dh.mu)
    if rs.friction is None:
        return np.zeros(rs.alg.dim)
    return np.asarray(rs.friction(dh.mu, x.n, x.S), dtype=float)


def reduced_context(rs: ReducedSystem, x: ReducedState, eps_T: float = EPS_T) -> ReducedContext:
    dh = rsplit(rs.h.grad(x), rs.alg.dim, rs.m)
    if abs(dh.S) < eps_T:
        raise ZeroTemperature(dh.S, state=x)
    return ReducedContext(dh, dh.S, _friction_from(rs, x, dh), rs.B(x.n))


def ad_star(alg: LieAlgebraStructure, xi, mu) -> np.ndarray:
    return alg.ad_star(np.asarray(xi, dtype=float), np.asarray(mu, dtype=float))


def momentum_map(rs: ReducedSystem, n, alpha) -> np.ndarray:
    """J(n, alpha) = B(n)^T alpha, so that <J(alpha), xi> = <alpha, B(n) xi>."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (rs.m,):
        raise DimensionMismatch(f"covector on N must have length {rs.m}")
    return rs.B(np.asarray(n, dtype=float)).T @ alpha


def double_bracket_friction(rs: ReducedSystem, mu, S: float) -> np.ndarray:
    """Orbit-preserving friction ad*_{[ad*_{dh/dmu} mu]#} mu at (mu, S)."""
    if rs.m:
        raise InvalidSystem("double-bracket friction is defined without the n variable")
    x = ReducedState(mu, (), S)
    xi = rs.h.grad(x)[:rs.alg.dim]
    return rs.orbit_friction_scale * double_bracket_force(rs.alg, x.mu, xi)


def reduced_vector_field(rs: ReducedSystem, x: ReducedState, eps_T: float = EPS_T) -> np.ndarray:
    """Flat tangent (mudot, ndot, Sdot)."""
    dh, T, f, B = reduced_context(rs, x, eps_T)
    mudot = rs.alg.ad_star(dh.mu, x.mu) + B.T @ dh.n + f
    ndot = -B @ dh.mu
    Sdot = -float(f @ dh.mu) / T
    return np.concatenate([mudot, ndot, [Sdot]])


def reduced_entropy_rate(rs: ReducedSystem, x: ReducedState, eps_T: float = EPS_T) -> float:
    dh, T, f, _ = reduced_context(rs, x, eps_T)
    return -float(f @ dh.mu) / T


# --- brackets -----------------------------------------------------------------

def _rblocks(rs, f: Observable, x) -> RSplit:
    return rsplit(f.grad(x), rs.alg.dim, rs.m)


def lie_poisson_grad(rs: ReducedSystem, x: ReducedState, df: RSplit, dg: RSplit, B=None) -> float:
    B = rs.B(x.n) if B is None else B
    return (-float(x.mu @ rs.alg.bracket(df.mu, dg.mu))
            + float(df.mu @ (B.T @ dg.n)) - float(dg.mu @ (B.T @ df.n)))


def lie_poisson_bracket(rs: ReducedSystem, f: Observable, g: Observable, x: ReducedState) -> float:
    """{f, g} = -<mu, [f_mu, g_mu]> + <f_mu, J(g_n)> - <g_mu, J(f_n)>."""
    return lie_poisson_grad(rs, x, _rblocks(rs, f, x), _rblocks(rs, g, x))


def lie_poisson_structure(rs: ReducedSystem) -> PoissonStructure:
    """Poisson tensor of the reduced bracket in flat (mu, n, S) coordinates."""
    d, m = rs.alg.dim, rs.m

    def tensor(x):
        P = np.zeros((d + m + 1, d + m + 1))
        P[:d, :d] = -np.einsum("ijk,k->ij", rs.alg.constants, x.mu)
        B = rs.B(x.n)
        P[:d, d:d + m] = B.T
        P[d:d + m, :d] = -B
        return P

    return PoissonStructure(tensor, f"lie-poisson({rs.alg.name})")


def reduced_single_grad(ctx: ReducedContext, df: RSplit) -> float:
    return float(ctx.f @ df.mu) - (df.S / ctx.T) * float(ctx.f @ ctx.dh.mu)


def reduced_double_grad(ctx: ReducedContext, df: RSplit, dg: RSplit) -> float:
    return (float(ctx.f @ df.mu) * dg.S + float(ctx.f @ dg.mu) * df.S
            - float(ctx.f @ ctx.dh.mu) / ctx.T * df.S * dg.S)


def reduced_metriplectic_grad(ctx: ReducedContext, gamma, df: RSplit, dg: RSplit) -> float:
    T, dh = ctx.T, ctx.dh
    a_f = df.mu * T - dh.mu * df.S
    a_g = dg.mu * T - dh.mu * dg.S
    return float(a_f @ gamma @ a_g) / T


def orbit_gradient(alg: LieAlgebraStructure, mu, u_mu) -> np.ndarray:
    """Normal-metric orbit gradient -ad*_{[ad*_{u_mu} mu]#} mu."""
    return -double_bracket_force(alg, mu, u_mu)


def orbit_metriplectic_grad(alg: LieAlgebraStructure, mu, ctx: ReducedContext, df: RSplit, dg: RSplit) -> float:
    # gamma_O(grad f, X) = <f_mu, X> for X tangent to the orbit
    T, dh = ctx.T, ctx.dh
    grad_g = orbit_gradient(alg, mu, dg.mu)
    grad_h = orbit_gradient(alg, mu, dh.mu)
    left = df.mu * T - dh.mu * df.S
    right = grad_g * T - grad_h * dg.S
    return float(left @ right) / T


def reduced_single_bracket(rs: ReducedSystem, f: Observable, x: ReducedState, eps_T: float = EPS_T) -> float:
    """[f, h]^red = <f^fr, f_mu> - (f_S / h_S) <f^fr, h_mu>."""
    return reduced_single_grad(reduced_context(rs, x, eps_T), _rblocks(rs, f, x))


def reduced_double_bracket(rs: ReducedSystem, f: Observable, g: Observable, x: ReducedState,
                           eps_T: float = EPS_T) -> float:
    return reduced_double_grad(reduced_context(rs, x, eps_T), _rblocks(rs, f, x), _rblocks(rs, g, x))


def _gamma(rs: ReducedSystem, x: ReducedState) -> np.ndarray:
    if rs.gamma_map is None:
        raise MissingLinearTransport(f"{rs.name}: reduced metriplectic bracket needs a linear friction map gamma(n, S)")
    return np.asarray(rs.gamma_map(x.n, x.S), dtype=float)


def reduced_metriplectic_bracket(rs: ReducedSystem, f: Observable, g: Observable, x: ReducedState,
                                 eps_T: float = EPS_T) -> float:
    gamma = _gamma(rs, x)
    return reduced_metriplectic_grad(reduced_context(rs, x, eps_T), gamma, _rblocks(rs, f, x), _rblocks(rs, g, x))


def _require_orbit(rs: ReducedSystem):
    if not rs.double_bracket:
        raise InvalidSystem(f"{rs.name}: orbit metriplectic bracket needs double-bracket friction")


def orbit_metriplectic_bracket(rs: ReducedSystem, f: Observable, g: Observable, x: ReducedState,
                               eps_T: float = EPS_T) -> float:
    """Metriplectic bracket on a coadjoint orbit for double-bracket friction.

    Pairings in the normal metric are reduced to duality pairings with the
    orbit gradients, so the formula is not manifestly symmetric; symmetry is
    audited by the verification harness.
    """
    _require_orbit(rs)
    ctx = reduced_context(rs, x, eps_T)
    return orbit_metriplectic_grad(rs.alg, x.mu, ctx, _rblocks(rs, f, x), _rblocks(rs, g, x))


# --- vector fields ----------------------------------------------------------

def _rbasis(rs):
    return [rsplit(e, rs.alg.dim, rs.m) for e in np.eye(rs.dim)]


def _rentropy(rs) -> np.ndarray:
    dS = np.zeros(rs.dim)
    dS[-1] = 1.0
    return dS


def reduced_hamiltonian_field(rs: ReducedSystem, x: ReducedState) -> np.ndarray:
    return lie_poisson_structure(rs).tensor_apply(rs.h.grad(x), x)


def reduced_dissipative_field_single(rs: ReducedSystem, x: ReducedState, eps_T: float = EPS_T) -> np.ndarray:
    ctx = reduced_context(rs, x, eps_T)
    return np.array([reduced_single_grad(ctx, e) for e in _rbasis(rs)])


def reduced_dissipative_field_double(rs: ReducedSystem, x: ReducedState, eps_T: float = EPS_T) -> SymmetricField:
    ctx = reduced_context(rs, x, eps_T)
    return _assemble(lambda f, g: reduced_double_grad(ctx, f, g), _rbasis(rs), _rentropy(rs))


def reduced_dissipative_field_metriplectic(rs: ReducedSystem, x: ReducedState,
                                           eps_T: float = EPS_T) -> SymmetricField:
    gamma = _gamma(rs, x)
    ctx = reduced_context(rs, x, eps_T)
    return _assemble(lambda f, g: reduced_metriplectic_grad(ctx, gamma, f, g), _rbasis(rs), _rentropy(rs))


def orbit_dissipative_field(rs: ReducedSystem, x: ReducedState, eps_T: float = EPS_T) -> SymmetricField:
    _require_orbit(rs)
    ctx = reduced_context(rs, x, eps_T)
    return _assemble(lambda f, g: orbit_metriplectic_grad(rs.alg, x.mu, ctx, f, g), _rbasis(rs), _rentropy(rs))


# --- trajectories -----------------------------------------------------------

def half_norm_squared(d: int) -> Observable:
    """Casimir 1/2 |mu|^2 (for so(3)) on the mu block of a reduced state."""

    def grad(x):
        g = np.zeros(x.as_array().size)
        g[:d] = x.mu
        return g

    return Observable(lambda x: 0.5 * float(x.mu @ x.mu), grad, "half_norm_sq")


def se2_casimir() -> Observable:
    """mu_x^2 + mu_y^2 for se(2) with basis (rotation, x, y)."""

    def grad(x):
        g = np.zeros(x.as_array().size)
        g[1:3] = 2.0 * x.mu[1:3]
        return g

    return Observable(lambda x: float(x.mu[1] ** 2 + x.mu[2] ** 2), grad, "se2_casimir")


def reduced_labels(d: int, m: int) -> list:
    return [f"mu_{i + 1}" for i in range(d)] + [f"n_{i + 1}" for i in range(m)] + ["S"]


def simulate_reduced(rs: ReducedSystem, x0: ReducedState, t_end: float, h: float, stride: int = 1) -> Trajectory:
    """Integrate the reduced vector field; records h, T, sigma and Casimir values."""

    def diag(x):
        ctx = reduced_context(rs, x)
        out = {
            "h": rs.h(x),
            "S": x.S,
            "T": ctx.T,
            "sigma": -float(ctx.f @ ctx.dh.mu) / ctx.T,
            "casimir": np.array([c(x) for c in rs.casimirs]),
        }
        return out

    traj = integrate(lambda x: reduced_vector_field(rs, x), x0, t_end, h, stride=stride,
                     diagnostics=diag, labels=reduced_labels(rs.alg.dim, rs.m))
    traj.csv_diagnostics = ["h", "casimir"]
    return traj


def casimir_drift(traj: Trajectory, casimirs: Sequence[Observable]) -> list:
    """Per-Casimir max |c(mu(t)) - c(mu(0))| along the trajectory."""
    if not len(traj):
        raise ValueError("empty trajectory")
    out = []
    for c in casimirs:
        vals = np.array([c(traj.state(i)) for i in range(len(traj))])
        out.append(float(np.max(np.abs(vals - vals[0]))))
    return out
