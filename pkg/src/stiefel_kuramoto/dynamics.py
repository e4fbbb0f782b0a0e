"""Synchronization potential, its intrinsic gradient, and the (generalized) Kuramoto flow.

Sign convention: :func:`gradient` returns ``grad_i V = -Pi_i(sum_j a_ij S_j)``.
The gradient-descent flow is ``dS_i/dt = -grad_i V``; the Kuramoto model adds
the drift ``Omega_i S_i + S_i Xi_i``.

The returned gradient is the Riemannian gradient of V/2. The factor of two
comes from writing the flow as ``Pi_i sum_j a_ij S_j`` while
``V = sum_edges a_ij ||S_i - S_j||^2``; only the time scale is affected.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.linalg import expm

from .errors import NotOrthonormal, NotSkew, ShapeError, SizeMismatch
from .graph import WeightedGraph
from .manifold import (
    ORTHO_TOL,
    StiefelPoint,
    TangentVector,
    orthonormality_defect,
    project_array,
    qr_retract_array,
)

SKEW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Configuration:
    """N agents on a common St(p, n), stored as an array of shape (N, n, p)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise ShapeError(f"configuration must have shape (N, n, p), got {data.shape}")
        if data.shape[2] > data.shape[1]:
            raise ShapeError(f"need p <= n, got n={data.shape[1]}, p={data.shape[2]}")
        worst = float(np.max(orthonormality_defect(data))) if len(data) else 0.0
        if not worst <= ORTHO_TOL:
            raise NotOrthonormal(worst, ORTHO_TOL)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_points(cls, agents: Iterable[StiefelPoint | np.ndarray]) -> "Configuration":
        mats = [np.asarray(a, dtype=float) for a in agents]
        mats = [m[:, None] if m.ndim == 1 else m for m in mats]
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise ShapeError(f"agents have differing shapes {sorted(shapes)}")
        return cls(np.stack(mats))

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def p(self) -> int:
        return self.data.shape[2]

    @property
    def agents(self) -> list[StiefelPoint]:
        return [StiefelPoint(s) for s in self.data]

    def __len__(self):
        return self.N

    def __repr__(self):
        return f"Configuration(N={self.N}, n={self.n}, p={self.p})"


def _check_skew(mats: np.ndarray, name: str) -> None:
    dev = np.abs(mats + np.swapaxes(mats, -1, -2))
    if dev.size and float(dev.max()) > SKEW_TOL:
        raise NotSkew(f"{name} is not skew-symmetric (max |A + A^T| = {float(dev.max()):.2e})")


@dataclass(frozen=True, eq=False)
class FrequencySet:
    """Per-agent left frequencies Omega_i in so(n) and right frequencies Xi_i in so(p)."""

    omega: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        xi = np.array(self.xi, dtype=float)
        if omega.ndim != 3 or omega.shape[1] != omega.shape[2]:
            raise ShapeError(f"omega must have shape (N, n, n), got {omega.shape}")
        if xi.ndim != 3 or xi.shape[1] != xi.shape[2]:
            raise ShapeError(f"xi must have shape (N, p, p), got {xi.shape}")
        if len(omega) != len(xi):
            raise SizeMismatch(f"{len(omega)} omegas but {len(xi)} xis")
        _check_skew(omega, "omega")
        _check_skew(xi, "xi")
        omega.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def common(cls, N: int, omega: np.ndarray, xi: np.ndarray) -> "FrequencySet":
        omega = np.asarray(omega, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return cls(np.broadcast_to(omega, (N,) + omega.shape), np.broadcast_to(xi, (N,) + xi.shape))

    @classmethod
    def zeros(cls, N: int, n: int, p: int) -> "FrequencySet":
        return cls(np.zeros((N, n, n)), np.zeros((N, p, p)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[Configuration]
    potential_values: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> Configuration:
        return self.states[-1]


class _Kernel:
    """Array-level right-hand side for a fixed graph and frequency set."""

    def __init__(self, g: WeightedGraph, f: FrequencySet | None = None):
        self.A = g.adjacency()
        self.N = g.n_nodes
        self.ei = np.array([e[0] for e in g.edges], dtype=int)
        self.ej = np.array([e[1] for e in g.edges], dtype=int)
        self.ew = np.array([e[2] for e in g.edges], dtype=float)
        self.omega = None if f is None else f.omega
        self.xi = None if f is None else f.xi

    def coupling(self, S: np.ndarray) -> np.ndarray:
        """sum_j a_ij S_j for each agent i; S has shape (..., N, n, p)."""
        flat = S.reshape(S.shape[:-2] + (-1,))
        return (self.A @ flat).reshape(S.shape)

    def descent(self, S: np.ndarray) -> np.ndarray:
        return project_array(self.coupling(S), S)

    def field(self, S: np.ndarray) -> np.ndarray:
        F = self.descent(S)
        if self.omega is not None:
            F = F + self.omega @ S + S @ self.xi
        return F

    def potential(self, S: np.ndarray) -> np.ndarray:
        if self.ei.size == 0:
            return np.zeros(S.shape[:-3])
        d = S[..., self.ei, :, :] - S[..., self.ej, :, :]
        return np.einsum("e,...e->...", self.ew, np.sum(d * d, axis=(-2, -1)))

    def rk4_step(self, S: np.ndarray, h: float) -> np.ndarray:
        k1 = self.field(S)
        k2 = self.field(S + (0.5 * h) * k1)
        k3 = self.field(S + (0.5 * h) * k2)
        k4 = self.field(S + h * k3)
        return qr_retract_array(S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def _check_sizes(c: Configuration, g: WeightedGraph, f: FrequencySet | None = None) -> None:
    if c.N != g.n_nodes:
        raise SizeMismatch(f"configuration has {c.N} agents, graph has {g.n_nodes} nodes")
    if f is not None:
        if len(f.omega) != c.N:
            raise SizeMismatch(f"{len(f.omega)} frequency entries for {c.N} agents")
        if f.omega.shape[1] != c.n or f.xi.shape[1] != c.p:
            raise SizeMismatch(
                f"omega {f.omega.shape[1:]} / xi {f.xi.shape[1:]} do not fit St({c.p},{c.n})"
            )


def potential(c: Configuration, g: WeightedGraph) -> float:
    """V = sum over edges of a_ij ||S_i - S_j||^2."""
    _check_sizes(c, g)
    return float(_Kernel(g).potential(c.data))


def gradient(c: Configuration, g: WeightedGraph) -> list[TangentVector]:
    _check_sizes(c, g)
    G = -_Kernel(g).descent(c.data)
    return [TangentVector(G[i], a) for i, a in enumerate(c.agents)]


def flow_field(c: Configuration, g: WeightedGraph, f: FrequencySet | None = None) -> list[TangentVector]:
    """Omega_i S_i + S_i Xi_i - grad_i V for every agent."""
    _check_sizes(c, g, f)
    F = _Kernel(g, f).field(c.data)
    return [TangentVector(F[i], a) for i, a in enumerate(c.agents)]


def _step_schedule(t_end: float, dt: float) -> list[float]:
    """Step sizes covering [0, t_end]: whole steps of ``dt`` plus a short remainder."""
    ratio = t_end / dt
    n_full = int(round(ratio)) if abs(ratio - round(ratio)) < 1e-9 else int(np.floor(ratio))
    steps = [dt] * n_full
    rem = t_end - n_full * dt
    if rem > 1e-12 * max(1.0, t_end):
        steps.append(rem)
    return steps


def integrate_array(
    S0: np.ndarray,
    g: WeightedGraph,
    f: FrequencySet | None,
    t_end: float,
    dt: float,
    record_every: int | None = None,
):
    """Advance a stack of configurations (..., N, n, p) with RK4 + QR retraction.

    Returns ``(times, states)``; with ``record_every=None`` only the initial
    and final states are kept. Every trial in the batch is independent.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t_end >= 0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    kernel = _Kernel(g, f)
    S = np.array(S0, dtype=float)
    steps = _step_schedule(t_end, dt)
    times, states = [0.0], [S.copy()]
    # a diverging step surfaces as non-finite values, which the retraction rejects
    with np.errstate(over="ignore", invalid="ignore"):
        for k, h in enumerate(steps, start=1):
            S = kernel.rk4_step(S, h)
            last = k == len(steps)
            if last or (record_every and k % record_every == 0):
                times.append(t_end if last else k * dt)
                states.append(S.copy())
    return np.array(times), states


def integrate(
    c0: Configuration,
    g: WeightedGraph,
    f: FrequencySet | None = None,
    t_end: float = 10.0,
    dt: float = 0.01,
    record_every: int = 1,
) -> Trajectory:
    """Integrate the flow from ``c0``; records every ``record_every``-th step and the final state."""
    _check_sizes(c0, g, f)
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    times, states = integrate_array(c0.data, g, f, t_end, dt, record_every)
    kernel = _Kernel(g)
    configs = [Configuration(s) for s in states]
    values = np.array([float(kernel.potential(s)) for s in states])
    return Trajectory(times, configs, values)


def rotating_frame(traj: Trajectory, omega, xi) -> Trajectory:
    """Map X_i(t) to exp(-t Omega) X_i(t) exp(-t Xi) at every recorded time."""
    omega = np.asarray(omega, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_skew(omega, "omega")
    _check_skew(xi, "xi")
    states = []
    for t, c in zip(traj.times, traj.states):
        R = expm(-t * omega)
        Q = expm(-t * xi)
        states.append(Configuration(R @ c.data @ Q))
    return Trajectory(np.array(traj.times), states, np.array(traj.potential_values))


def max_pairwise_distance_array(S: np.ndarray) -> np.ndarray:
    """Largest chordal distance over all agent pairs, batched over leading axes."""
    N = S.shape[-3]
    if N < 2:
        return np.zeros(S.shape[:-3])
    i, j = np.triu_indices(N, 1)
    d = S[..., i, :, :] - S[..., j, :, :]
    return np.sqrt(np.max(np.sum(d * d, axis=(-2, -1)), axis=-1))


def sync_state(c: Configuration, eps: float = 1e-6) -> bool:
    """True iff every pair of agents (not only neighbours) is within ``eps``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return bool(max_pairwise_distance_array(c.data) <= eps)


def random_skew(rng: np.random.Generator, k: int, norm: float = 1.0) -> np.ndarray:
    """Random k x k skew-symmetric matrix with Frobenius norm ``norm``."""
    W = rng.standard_normal((k, k))
    W = W - W.T
    nrm = np.linalg.norm(W)
    return W * (norm / nrm) if nrm > 0 else W
