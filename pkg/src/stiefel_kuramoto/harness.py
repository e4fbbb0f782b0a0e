"""Scenario configuration, single runs, Monte Carlo basin estimates and the (p, n) table.

Seeds: a run with seed ``s`` draws its initial state from
``default_rng(s)``. Monte Carlo trial ``k`` uses seed ``s + k``. Random
frequencies come from ``default_rng([s, 1])`` of the *scenario* seed, so
every trial of a Monte Carlo batch shares the same frequencies.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dynamics import (
    Configuration,
    FrequencySet,
    Trajectory,
    _Kernel,
    integrate,
    integrate_array,
    max_pairwise_distance_array,
    random_skew,
)
from .equilibria import SPLAY_BUILDERS, equilibrium_check, splay_signature_error_array
from .errors import ConfigError
from .graph import WeightedGraph, complete_graph, cycle_graph
from .io import dump_json, write_trajectory_csv
from .manifold import haar_array, project_array, qr_retract_array
from .stability import classify, integer_program

log = logging.getLogger(__name__)

SPLAY_TOL = 1e-3
SPLAY_DIMS = {"splay_circle": (2, 1), "splay_sphere": (3, 1), "splay_st23": (3, 2)}
DEFAULT_SPLAY = {dims: name for name, dims in SPLAY_DIMS.items()}

Matrix = list[list[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ManifoldSpec(_Strict):
    n: int = Field(ge=1)
    p: int = Field(ge=1)

    @model_validator(mode="after")
    def _p_le_n(self):
        if self.p > self.n:
            raise ValueError(f"need p <= n, got n={self.n}, p={self.p}")
        return self


class FamilyGraphSpec(_Strict):
    family: Literal["cycle", "complete"]
    n_nodes: int = Field(ge=2)
    weight: float = Field(default=1.0, gt=0)


class EdgeGraphSpec(_Strict):
    n_nodes: int = Field(ge=1)
    edges: list[tuple[int, int, float]]


class FrequencySpec(_Strict):
    """Explicit per-agent matrices, or random skew matrices of Frobenius norm ``random_norm``."""

    omega: list[Matrix] | None = None
    xi: list[Matrix] | None = None
    random_norm: float | None = Field(default=None, gt=0)
    common: bool = True


class PerturbedSplay(_Strict):
    kind: Literal["perturbed_splay"]
    magnitude: float = Field(gt=0)
    base: Literal["splay_circle", "splay_sphere", "splay_st23"] | None = None


class ExplicitInitial(_Strict):
    kind: Literal["explicit"]
    agents: list[Matrix]


InitialSpec = Union[
    Literal["haar", "splay_circle", "splay_sphere", "splay_st23"],
    Annotated[Union[PerturbedSplay, ExplicitInitial], Field(discriminator="kind")],
]


class Scenario(_Strict):
    manifold: ManifoldSpec
    graph: Union[FamilyGraphSpec, EdgeGraphSpec]
    model: Literal["gradient", "kuramoto"] = "gradient"
    frequencies: FrequencySpec | None = None
    initial: InitialSpec = "haar"
    t_end: float = Field(default=100.0, ge=0)
    dt: float = Field(default=0.01, gt=0)
    record_every: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    sync_eps: float = Field(default=1e-6, gt=0)

    @model_validator(mode="after")
    def _consistent(self):
        if self.model == "gradient" and self.frequencies is not None:
            raise ValueError("frequencies are only allowed with model 'kuramoto'")
        if self.model == "kuramoto" and self.frequencies is None:
            raise ValueError("model 'kuramoto' needs a 'frequencies' entry")
        dims = (self.manifold.n, self.manifold.p)
        base = None
        if isinstance(self.initial, str) and self.initial in SPLAY_DIMS:
            base = self.initial
        elif isinstance(self.initial, PerturbedSplay):
            base = self.initial.base or DEFAULT_SPLAY.get(dims)
            if base is None:
                raise ValueError(f"no splay family on St({dims[1]},{dims[0]}); set initial.base")
        if base is not None:
            if SPLAY_DIMS[base] != dims:
                raise ValueError(f"{base} lives on St{SPLAY_DIMS[base][::-1]}, scenario is St({dims[1]},{dims[0]})")
            if self.graph.n_nodes < 3:
                raise ValueError("splay states need at least 3 agents")
        return self

    # -- builders -------------------------------------------------------
    @property
    def N(self) -> int:
        return self.graph.n_nodes

    def build_graph(self) -> WeightedGraph:
        g = self.graph
        try:
            if isinstance(g, FamilyGraphSpec):
                return (cycle_graph if g.family == "cycle" else complete_graph)(g.n_nodes, g.weight)
            return WeightedGraph(g.n_nodes, tuple(g.edges))
        except ValueError as exc:
            raise ConfigError(str(exc), "graph") from exc

    def build_frequencies(self) -> FrequencySet | None:
        f = self.frequencies
        if f is None:
            return None
        N, n, p = self.N, self.manifold.n, self.manifold.p
        try:
            if f.random_norm is not None:
                if f.omega is not None or f.xi is not None:
                    raise ConfigError("give either random_norm or explicit omega/xi", "frequencies")
                rng = np.random.default_rng([self.seed, 1])
                if f.common:
                    return FrequencySet.common(N, random_skew(rng, n, f.random_norm), random_skew(rng, p, f.random_norm))
                omega = [random_skew(rng, n, f.random_norm) for _ in range(N)]
                xi = [random_skew(rng, p, f.random_norm) for _ in range(N)]
                return FrequencySet(np.array(omega), np.array(xi))
            omega = np.zeros((N, n, n)) if f.omega is None else np.array(f.omega, dtype=float)
            xi = np.zeros((N, p, p)) if f.xi is None else np.array(f.xi, dtype=float)
            if f.common:
                omega = np.broadcast_to(omega[0] if omega.ndim == 3 else omega, (N, n, n))
                xi = np.broadcast_to(xi[0] if xi.ndim == 3 else xi, (N, p, p))
            if omega.shape != (N, n, n) or xi.shape != (N, p, p):
                raise ConfigError(f"expected omega {(N, n, n)} and xi {(N, p, p)}", "frequencies")
            return FrequencySet(omega, xi)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc), "frequencies") from exc

    def build_initial(self, seed: int | None = None) -> Configuration:
        seed = self.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        N, n, p = self.N, self.manifold.n, self.manifold.p
        init = self.initial
        if init == "haar":
            return Configuration(haar_array(rng, n, p, (N,)))
        if isinstance(init, str):
            return SPLAY_BUILDERS[init](N)
        if isinstance(init, PerturbedSplay):
            base = SPLAY_BUILDERS[init.base or DEFAULT_SPLAY[(n, p)]](N)
            return Configuration(perturb(base.data, init.magnitude, rng))
        try:
            c = Configuration(np.array(init.agents, dtype=float))
        except ValueError as exc:
            raise ConfigError(str(exc), "initial.agents") from exc
        if c.data.shape != (N, n, p):
            raise ConfigError(f"expected {N} agents of shape {(n, p)}, got {c.data.shape}", "initial.agents")
        return c


def perturb(S: np.ndarray, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Move each agent along a Gaussian tangent direction of Frobenius norm ``magnitude``, then retract."""
    T = project_array(rng.standard_normal(S.shape), S)
    T *= magnitude / np.linalg.norm(T, axis=(-2, -1), keepdims=True)
    return qr_retract_array(S + T)


def load_scenario(source: str | Path | dict[str, Any]) -> Scenario:
    """Parse a scenario from a JSON file path or an already-decoded dict."""
    if isinstance(source, dict):
        obj = source
    else:
        try:
            obj = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    try:
        return Scenario.model_validate(obj)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(x) for x in err["loc"]) or None
        raise ConfigError(err["msg"], loc) from exc


# -- outcome labelling ---------------------------------------------------

def label_outcomes(S: np.ndarray, sync_eps: float) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Label final states (..., N, n, p) as consensus / splay_like / other.

    Splay detection only applies on the circle St(1,2).
    """
    dist = np.atleast_1d(max_pairwise_distance_array(S))
    shape_np = S.shape[-2:]
    if shape_np == (2, 1) and S.shape[-3] >= 3:
        serr = np.atleast_1d(splay_signature_error_array(S))
    else:
        serr = np.full(dist.shape, np.nan)
    labels = []
    for d, e in zip(dist, serr):
        if d <= sync_eps:
            labels.append("consensus")
        elif e <= SPLAY_TOL:
            labels.append("splay_like")
        else:
            labels.append("other")
    return labels, dist, serr


@dataclass
class RunResult:
    trajectory: Trajectory
    summary: dict[str, Any]


def _summary(s: Scenario, seed: int, final: np.ndarray, g: WeightedGraph) -> dict[str, Any]:
    labels, dist, _ = label_outcomes(final[None], s.sync_eps)
    c = Configuration(final)
    return {
        "final_V": float(_Kernel(g).potential(final)),
        "synced": bool(dist[0] <= s.sync_eps),
        "t_end": s.t_end,
        "n": s.manifold.n,
        "p": s.manifold.p,
        "N": s.N,
        "seed": seed,
        "final_distance_to_consensus": float(dist[0]),
        "final_equilibrium_residual": equilibrium_check(c, g).residual,
        "outcome": labels[0],
    }


def run_scenario(s: Scenario, out_dir: str | Path | None = None, seed: int | None = None) -> RunResult:
    """Integrate one scenario; writes ``trajectory.csv`` and ``summary.json`` when ``out_dir`` is set."""
    seed = s.seed if seed is None else seed
    g = s.build_graph()
    f = s.build_frequencies() if s.model == "kuramoto" else None
    c0 = s.build_initial(seed)
    traj = integrate(c0, g, f, s.t_end, s.dt, s.record_every)
    summary = _summary(s, seed, traj.final.data, g)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "trajectory.csv", "w", newline="") as fh:
            write_trajectory_csv(traj, fh)
        dump_json(summary, out / "summary.json")
    return RunResult(traj, summary)


@dataclass
class MonteCarloResult:
    trials: int
    synced_count: int
    sync_fraction: float
    outcome_histogram: dict[str, int]
    per_trial: list[dict[str, Any]] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "synced_count": self.synced_count,
            "sync_fraction": self.sync_fraction,
            "outcome_histogram": self.outcome_histogram,
            "per_trial": self.per_trial,
        }


def _run_chunk(s: Scenario, seeds: list[int]) -> list[dict[str, Any]]:
    g = s.build_graph()
    f = s.build_frequencies() if s.model == "kuramoto" else None
    S0 = np.stack([s.build_initial(k).data for k in seeds])
    _, states = integrate_array(S0, g, f, s.t_end, s.dt)
    final = states[-1]
    labels, dist, serr = label_outcomes(final, s.sync_eps)
    V = _Kernel(g).potential(final)
    return [
        {
            "seed": k,
            "final_V": float(V[i]),
            "final_distance_to_consensus": float(dist[i]),
            "splay_signature_error": None if np.isnan(serr[i]) else float(serr[i]),
            "label": labels[i],
        }
        for i, k in enumerate(seeds)
    ]


def monte_carlo(
    s: Scenario,
    trials: int,
    out_dir: str | Path | None = None,
    workers: int = 1,
    chunk_size: int = 256,
) -> MonteCarloResult:
    """Integrate ``trials`` Haar-random initial states with seeds ``s.seed + k``.

    Trials are integrated in vectorised chunks; with ``workers > 1`` chunks go
    to a process pool. Results do not depend on chunking.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1", "trials")
    if s.initial != "haar":
        raise ConfigError("Monte Carlo requires initial = 'haar'", "initial")
    seeds = [s.seed + k for k in range(trials)]
    chunks = [seeds[i:i + chunk_size] for i in range(0, trials, chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [s] * len(chunks), chunks))
    else:
        parts = [_run_chunk(s, ch) for ch in chunks]
    per_trial = [row for part in parts for row in part]
    hist = {"consensus": 0, "splay_like": 0, "other": 0}
    for row in per_trial:
        hist[row["label"]] += 1
    synced = hist["consensus"]
    result = MonteCarloResult(trials, synced, synced / trials, hist, per_trial)
    log.info("monte carlo: %d/%d synchronized", synced, trials)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(result.to_json(), out / "montecarlo.json")
    return result


CLASSIFY_HEADER = ["p", "n", "agas_guaranteed", "optimal_objective", "m_minus", "m_star", "m_plus", "lambda_star"]


def classify_table(n_max: int) -> list[dict[str, Any]]:
    """Threshold test and integer program for every 1 <= p < n <= n_max; the two must agree."""
    if n_max < 2:
        raise ConfigError("n_max must be >= 2", "nmax")
    rows = []
    for n in range(2, n_max + 1):
        for p in range(1, n):
            rep = integer_program(p, n)
            agas = classify(p, n)
            if agas != (rep.optimal_objective == 0):
                raise ArithmeticError(f"classifiers disagree at (p, n) = ({p}, {n})")
            rows.append({
                "p": p,
                "n": n,
                "agas_guaranteed": agas,
                "optimal_objective": rep.optimal_objective,
                "m_minus": rep.m_minus,
                "m_star": rep.m_star,
                "m_plus": rep.m_plus,
                "lambda_star": rep.lambda_star,
            })
    return rows


def classify_csv(rows: list[dict[str, Any]]) -> str:
    lines = [",".join(CLASSIFY_HEADER)]
    for r in rows:
        lines.append(",".join(
            str(r[k]).lower() if isinstance(r[k], bool) else str(r[k]) for k in CLASSIFY_HEADER
        ))
    return "\n".join(lines) + "\n"
