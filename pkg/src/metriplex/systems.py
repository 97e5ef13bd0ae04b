"""State spaces, observables and system descriptions.

Every state type exposes ``as_array()`` / ``with_array(arr)`` so that observables,
finite differences and the integrator can work on one flat coordinate vector.
For a :class:`ThermoMechState` the flat layout is ``[q (n), p (n), S, N (K)]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GradientMismatch,
    HyperregularityFailure,
    InvalidSystem,
    NoCompartments,
    NonFiniteEvaluation,
    ZeroTemperature,
)

#: temperature floor; brackets divide by dH/dS
EPS_T = 1e-10
FD_EPS = np.cbrt(np.finfo(float).eps)
AUDIT_STATES = 16
AUDIT_TOL = 1e-5


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ThermoMechState:
    """Point (q, p, S, N) of T*Q x R^{K+1}."""

    q: np.ndarray
    p: np.ndarray
    S: float
    N: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        q, p, N = _frozen(self.q), _frozen(self.p), _frozen(self.N)
        if q.size < 1 or q.size != p.size:
            raise DimensionMismatch(f"q and p must have equal length >= 1, got {q.size} and {p.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "S", float(self.S))
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.isfinite(self.S) and np.all(np.isfinite(N))):
            raise ValueError("state entries must be finite")

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def K(self) -> int:
        return self.N.size

    @property
    def dim(self) -> int:
        return 2 * self.n + 1 + self.K

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p, [self.S], self.N])

    def with_array(self, arr) -> "ThermoMechState":
        return ThermoMechState.from_array(arr, self.n, self.K)

    @classmethod
    def from_array(cls, arr, n: int, K: int) -> "ThermoMechState":
        arr = np.asarray(arr, dtype=float)
        if arr.size != 2 * n + 1 + K:
            raise DimensionMismatch(f"expected {2 * n + 1 + K} entries, got {arr.size}")
        return cls(arr[:n], arr[n:2 * n], arr[2 * n], arr[2 * n + 1:])


class Split(NamedTuple):
    q: np.ndarray
    p: np.ndarray
    S: float
    N: np.ndarray


def split(vec, n: int, K: int) -> Split:
    """Split a flat covector/tangent into its (q, p, S, N) blocks."""
    vec = np.asarray(vec, dtype=float)
    return Split(vec[:n], vec[n:2 * n], float(vec[2 * n]), vec[2 * n + 1:2 * n + 1 + K])


def _flat(x) -> np.ndarray:
    if hasattr(x, "as_array"):
        return x.as_array()
    return np.asarray(x, dtype=float).reshape(-1)


def _rebuilder(x):
    if hasattr(x, "with_array"):
        return x.with_array
    return lambda arr: arr


def fd_gradient(f: Callable, x, scale: Optional[Sequence[float]] = None) -> np.ndarray:
    """Central-difference gradient of a scalar map at ``x``.

    ``x`` may be a state object or a flat array; ``f`` is called with the same
    kind of object. Step on coordinate i is ``scale[i] * cbrt(eps)`` where the
    default scale is ``max(1, |x_i|)``.
    """
    arr = _flat(x)
    rebuild = _rebuilder(x)
    if scale is None:
        scale = np.maximum(1.0, np.abs(arr))
    scale = np.asarray(scale, dtype=float)
    if scale.shape != arr.shape or np.any(scale <= 0):
        raise ValueError("scale must be positive and match the state dimension")
    f0 = f(rebuild(arr))
    if not np.isfinite(f0):
        raise NonFiniteEvaluation(None, f0)
    grad = np.empty_like(arr)
    for i in range(arr.size):
        h = scale[i] * FD_EPS
        up, down = arr.copy(), arr.copy()
        up[i] += h
        down[i] -= h
        fp, fm = f(rebuild(up)), f(rebuild(down))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteEvaluation(i, fp if not np.isfinite(fp) else fm)
        grad[i] = (fp - fm) / (up[i] - down[i])
    return grad


class Observable:
    """Scalar function on a state space with its gradient.

    When ``gradient`` is omitted the gradient is computed by central differences
    and ``gradient_mode`` reports ``"finite-difference"``.
    """

    def __init__(self, value: Callable, gradient: Optional[Callable] = None, name: str = ""):
        self.value = value
        self._gradient = gradient
        self.name = name

    @property
    def gradient_mode(self) -> str:
        return "analytic" if self._gradient is not None else "finite-difference"

    def __call__(self, x) -> float:
        return float(self.value(x))

    def grad(self, x) -> np.ndarray:
        if self._gradient is None:
            return fd_gradient(self.value, x)
        return np.asarray(self._gradient(x), dtype=float).reshape(-1)

    def __repr__(self):
        return f"Observable({self.name or '?'}, {self.gradient_mode})"

    # algebra used by the Leibniz and bilinearity audits
    def __mul__(self, other: "Observable") -> "Observable":
        return product(self, other)

    def __add__(self, other: "Observable") -> "Observable":
        return linear_combination([(1.0, self), (1.0, other)])


def coordinate(i: int, name: str = "") -> Observable:
    """The i-th flat coordinate function."""

    def grad(x):
        g = np.zeros(_flat(x).size)
        g[i] = 1.0
        return g

    return Observable(lambda x: _flat(x)[i], grad, name or f"x{i}")


def constant(c: float) -> Observable:
    return Observable(lambda x: c, lambda x: np.zeros(_flat(x).size), f"const({c})")


def quadratic(c0: float, b, A, name: str = "quadratic") -> Observable:
    """``c0 + b.x + 1/2 x.A.x`` on the flat coordinates (A is symmetrized)."""
    b = np.asarray(b, dtype=float)
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)

    def value(x):
        z = _flat(x)
        return c0 + b @ z + 0.5 * z @ A @ z

    return Observable(value, lambda x: b + A @ _flat(x), name)


def random_quadratic(dim: int, rng: np.random.Generator, name: str = "random_quadratic") -> Observable:
    """Quadratic with every coefficient drawn uniformly from [-1, 1]."""
    c0 = rng.uniform(-1, 1)
    b = rng.uniform(-1, 1, dim)
    A = rng.uniform(-1, 1, (dim, dim))
    return quadratic(c0, b, A, name)


def product(f: Observable, g: Observable) -> Observable:
    return Observable(
        lambda x: f(x) * g(x),
        lambda x: f(x) * g.grad(x) + g(x) * f.grad(x),
        f"({f.name}*{g.name})",
    )


def linear_combination(terms) -> Observable:
    terms = list(terms)
    return Observable(
        lambda x: sum(a * f(x) for a, f in terms),
        lambda x: sum(a * f.grad(x) for a, f in terms),
        "+".join(f"{a:g}*{f.name}" for a, f in terms),
    )


@dataclass(frozen=True, eq=False)
class LinearTransport:
    """Linear flux-force laws: F^fr = -lam(q, S) v and J^{l->k} = -G^{kl}(S, N)(mu^k - mu^l)."""

    lam: Callable[[np.ndarray, float], np.ndarray]
    G: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def friction(self, q, v, S):
        return -np.asarray(self.lam(q, S), dtype=float) @ v

    def flux(self, S, N, mu):
        K = len(mu)
        if self.G is None or K == 0:
            return np.zeros((K, K))
        G = np.asarray(self.G(S, N), dtype=float)
        # J[k, l] = J^{l->k} = -G^{kl} (mu^k - mu^l)
        return -G * (mu[:, None] - mu[None, :])


def default_sampler(n: int, K: int) -> Callable[[np.random.Generator], ThermoMechState]:
    def sample(rng):
        return ThermoMechState(rng.normal(size=n), rng.normal(size=n), rng.normal(), rng.uniform(0.5, 2.5, K))

    return sample


def _zero_friction(q, v, S):
    return np.zeros_like(v)


def _zero_flux(S, N, mu):
    return np.zeros((len(mu), len(mu)))


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """A simple thermodynamic system on T*Q x R^{K+1} described through H.

    ``friction(q, v, S)`` receives the velocity ``v = dH/dp``; ``flux(S, N, mu)``
    returns the antisymmetric matrix ``J[k, l] = J^{l->k}`` with ``mu = dH/dN``.
    If ``linear_transport`` is given and a closure is omitted, the closure is
    generated from the linear law. Construction audits the analytic gradient of
    H, flux antisymmetry and agreement of the closures with the declared linear
    laws; any failure is a hard error.
    """

    n: int
    K: int
    H: Observable
    friction: Optional[Callable] = None
    flux: Optional[Callable] = None
    external_force: Optional[Callable] = None
    linear_transport: Optional[LinearTransport] = None
    name: str = "custom"
    sampler: Optional[Callable] = None
    audit: bool = True

    def __post_init__(self):
        if self.n < 1 or self.K < 0:
            raise InvalidSystem(f"need n >= 1 and K >= 0, got n={self.n}, K={self.K}")
        lt = self.linear_transport
        if self.friction is None:
            object.__setattr__(self, "friction", lt.friction if lt is not None else _zero_friction)
        if self.flux is None:
            object.__setattr__(self, "flux", lt.flux if lt is not None else _zero_flux)
        if self.sampler is None:
            object.__setattr__(self, "sampler", default_sampler(self.n, self.K))
        if self.audit:
            self._audit()

    @property
    def dim(self) -> int:
        return 2 * self.n + 1 + self.K

    @property
    def gradient_mode(self) -> str:
        return self.H.gradient_mode

    def state(self, q, p, S, N=()) -> ThermoMechState:
        x = ThermoMechState(q, p, S, N)
        if x.n != self.n or x.K != self.K:
            raise DimensionMismatch(f"state dims (n={x.n}, K={x.K}) do not match system (n={self.n}, K={self.K})")
        return x

    def _audit(self, seed: int = 0):
        rng = np.random.default_rng(seed)
        for _ in range(AUDIT_STATES):
            x = self.sampler(rng)
            if np.size(self.H.grad(x)) != self.dim:
                raise DimensionMismatch(f"{self.name}: dH must have length {self.dim}")
            if self.H.gradient_mode == "analytic":
                ga = self.H.grad(x)
                gf = fd_gradient(self.H, x)
                err = np.max(np.abs(ga - gf)) / max(1.0, np.max(np.abs(ga)))
                if err > AUDIT_TOL:
                    raise GradientMismatch(f"{self.name}: analytic dH differs from finite differences by {err:.2e} at {x}")
            d = split(self.H.grad(x), self.n, self.K)
            J = np.asarray(self.flux(x.S, x.N, d.N), dtype=float)
            if J.shape != (self.K, self.K):
                raise InvalidSystem(f"flux must return a {self.K}x{self.K} matrix, got {J.shape}")
            if np.max(np.abs(J + J.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(J), initial=0.0)):
                raise InvalidSystem(f"{self.name}: flux matrix is not antisymmetric")
            lt = self.linear_transport
            if lt is not None:
                F = np.asarray(self.friction(x.q, d.p, x.S), dtype=float)
                F_lin = lt.friction(x.q, d.p, x.S)
                J_lin = lt.flux(x.S, x.N, d.N)
                scale = max(1.0, np.max(np.abs(F_lin)), np.max(np.abs(J_lin), initial=0.0))
                if np.max(np.abs(F - F_lin)) > 1e-10 * scale or np.max(np.abs(J - J_lin), initial=0.0) > 1e-10 * scale:
                    raise InvalidSystem(f"{self.name}: friction/flux closures disagree with the declared linear laws")
                if self.K:
                    G = np.asarray(lt.G(x.S, x.N), dtype=float) if lt.G is not None else np.zeros((self.K, self.K))
                    if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
                        raise InvalidSystem(f"{self.name}: transport matrix G must be symmetric")


class ThermoContext(NamedTuple):
    """Gradient blocks of H plus the closures evaluated through H at one state."""

    dH: Split
    T: float
    F: np.ndarray
    J: np.ndarray


def thermo_context(sys: HamiltonianSystem, x: ThermoMechState, eps_T: float = EPS_T) -> ThermoContext:
    dH = split(sys.H.grad(x), sys.n, sys.K)
    T = dH.S
    if abs(T) < eps_T:
        raise ZeroTemperature(T, state=x)
    F = np.asarray(sys.friction(x.q, dH.p, x.S), dtype=float)
    J = np.asarray(sys.flux(x.S, x.N, dH.N), dtype=float).reshape(sys.K, sys.K)
    return ThermoContext(dH, T, F, J)


@lru_cache(maxsize=None)
def upper_pairs(K: int):
    """Index arrays (k, l) of all pairs k < l."""
    k, l = np.triu_indices(K, 1)
    k.setflags(write=False)
    l.setflags(write=False)
    return k, l


def flux_pairing(J: np.ndarray, a: np.ndarray) -> float:
    """sum_{k<l} J^{l->k} (a_k - a_l)."""
    if J.shape[0] < 2:
        return 0.0
    k, l = upper_pairs(J.shape[0])
    return float(np.sum(J[k, l] * (a[k] - a[l])))


def chemical_potentials(sys: HamiltonianSystem, x: ThermoMechState) -> np.ndarray:
    """mu^k = dH/dN_k (equal to -dL/dN_k on the Lagrangian side)."""
    if sys.K == 0:
        raise NoCompartments("system has no compartments")
    return split(sys.H.grad(x), sys.n, sys.K).N.copy()


@dataclass(frozen=True, eq=False)
class LagrangianSystem:
    """L(q, v, S, N) with optional analytic partials.

    ``L_grad(q, v, S, N)`` returns ``(dL/dq, dL/dv, dL/dS, dL/dN)``;
    ``hess_vv(q, v, S, N)`` returns the n x n fiber Hessian. Missing pieces are
    filled in by finite differences.
    """

    n: int
    K: int
    L: Callable
    L_grad: Optional[Callable] = None
    hess_vv: Optional[Callable] = None
    friction: Optional[Callable] = None
    flux: Optional[Callable] = None
    external_force: Optional[Callable] = None
    linear_transport: Optional[LinearTransport] = None
    velocity_seed: Optional[Callable] = None
    name: str = "lagrangian"

    def partials(self, q, v, S, N):
        if self.L_grad is not None:
            Lq, Lv, LS, LN = self.L_grad(q, v, S, N)
            return np.asarray(Lq, float), np.asarray(Lv, float), float(LS), np.asarray(LN, float)
        n = self.n
        z = np.concatenate([q, v, [S], N])
        g = fd_gradient(lambda w: self.L(w[:n], w[n:2 * n], w[2 * n], w[2 * n + 1:]), z)
        return g[:n], g[n:2 * n], float(g[2 * n]), g[2 * n + 1:]

    def fiber_derivative(self, q, v, S, N) -> np.ndarray:
        return self.partials(q, v, S, N)[1]

    def fiber_hessian(self, q, v, S, N) -> np.ndarray:
        if self.hess_vv is not None:
            return np.asarray(self.hess_vv(q, v, S, N), dtype=float).reshape(self.n, self.n)
        Hm = np.empty((self.n, self.n))
        for j in range(self.n):
            h = max(1.0, abs(v[j])) * FD_EPS
            vp, vm = v.copy(), v.copy()
            vp[j] += h
            vm[j] -= h
            Hm[:, j] = (self.fiber_derivative(q, vp, S, N) - self.fiber_derivative(q, vm, S, N)) / (vp[j] - vm[j])
        return Hm


NEWTON_MAXITER = 50
NEWTON_TOL = 1e-12
#: residual floor when dL/dv itself comes from finite differences
NEWTON_TOL_FD = 1e-8


def solve_velocity(lag: LagrangianSystem, q, p, S, N, v0=None) -> np.ndarray:
    """Solve dL/dv(q, v, S, N) = p for v by Newton's method."""
    p = np.asarray(p, dtype=float)
    if v0 is None:
        v0 = lag.velocity_seed(q, p, S, N) if lag.velocity_seed is not None else p
    v = np.array(v0, dtype=float)
    base = NEWTON_TOL if lag.L_grad is not None else NEWTON_TOL_FD
    tol = base * max(1.0, np.max(np.abs(p), initial=0.0))
    for _ in range(NEWTON_MAXITER + 1):
        r = lag.fiber_derivative(q, v, S, N) - p
        if not np.all(np.isfinite(r)):
            break
        if np.max(np.abs(r)) <= tol:
            return v
        try:
            v = v - np.linalg.solve(lag.fiber_hessian(q, v, S, N), r)
        except np.linalg.LinAlgError:
            break
    raise HyperregularityFailure(f"{lag.name}: fiber derivative not inverted at q={q}, p={p}, S={S}")


def legendre_to_hamiltonian(lag: LagrangianSystem, **kwargs) -> HamiltonianSystem:
    """Hamiltonian H = <p, v> - L with v solving dL/dv = p.

    Gradients use dH/dq = -dL/dq, dH/dp = v, dH/dS = -dL/dS, dH/dN = -dL/dN.
    Extra keyword arguments are forwarded to :class:`HamiltonianSystem`.
    """
    n, K = lag.n, lag.K

    def solve(x):
        return solve_velocity(lag, x.q, x.p, x.S, x.N)

    def value(x):
        v = solve(x)
        return float(x.p @ v - lag.L(x.q, v, x.S, x.N))

    def gradient(x):
        v = solve(x)
        Lq, _, LS, LN = lag.partials(x.q, v, x.S, x.N)
        return np.concatenate([-Lq, v, [-LS], -np.asarray(LN).reshape(K)])

    return HamiltonianSystem(
        n=n,
        K=K,
        H=Observable(value, gradient, f"H[{lag.name}]"),
        friction=lag.friction,
        flux=lag.flux,
        external_force=lag.external_force,
        linear_transport=lag.linear_transport,
        name=kwargs.pop("name", lag.name),
        **kwargs,
    )
