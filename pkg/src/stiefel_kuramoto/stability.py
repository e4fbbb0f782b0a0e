"""Hessian trace bound at equilibria and the eigenvalue-multiplicity integer program.

At an equilibrium, a negative ``trace_m`` proves that the restricted Hessian
quadratic form has a negative eigenvalue, i.e. the equilibrium is
exponentially unstable. ``f_bound`` is the per-edge summand of ``trace_m / 2``;
maximising it over pairs of Stiefel points reduces to a three-variable
integer program over the multiplicities of the eigenvalues (-1, lambda*, 1)
of Z = X^T Y. The optimum is zero exactly when 3p <= 2n - 3.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import Configuration, _check_sizes
from .errors import InvalidDimensions, InvalidMultiplicities, ShapeError
from .graph import WeightedGraph
from .manifold import StiefelPoint, haar_array, project_array, qr_retract_array


def f_bound_array(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """f(X, Y) over stacks of shape (..., n, p)."""
    n, p = X.shape[-2:]
    c = np.sum(X * Y, axis=(-2, -1))
    Z = np.swapaxes(X, -1, -2) @ Y
    z2 = np.sum(Z * Z, axis=(-2, -1))
    return (n - (p + 1) / 2) * c - (p + 2) / 4 * z2 - 0.25 * c * c + (1 - n + p) * p


def f_bound(X: StiefelPoint, Y: StiefelPoint) -> float:
    """Per-edge term of the trace bound; f(X, X) = 0."""
    if X.data.shape != Y.data.shape:
        raise ShapeError(f"shape mismatch {X.data.shape} vs {Y.data.shape}")
    return float(f_bound_array(X.data, Y.data))


def trace_m_terms(c: Configuration, g: WeightedGraph) -> np.ndarray:
    """a_ik * f(S_i, S_k) for every edge, in ``g.edges`` order. Sums to trace_m / 2."""
    _check_sizes(c, g)
    if not g.edges:
        return np.zeros(0)
    i = np.array([e[0] for e in g.edges])
    k = np.array([e[1] for e in g.edges])
    w = np.array([e[2] for e in g.edges])
    return w * f_bound_array(c.data[i], c.data[k])


def trace_m(c: Configuration, g: WeightedGraph) -> float:
    """Closed-form trace of the Hessian-derived matrix M.

    Only meaningful as a Hessian quantity at an equilibrium, but defined for
    any configuration. Zero at consensus.
    """
    return 2.0 * float(np.sum(trace_m_terms(c, g)))


def _check_dims(p: int, n: int) -> None:
    if not (1 <= p < n):
        raise InvalidDimensions(f"need 1 <= p < n, got p={p}, n={n}")


def lambda_star(p: int, n: int, m_minus: int, m_star: int) -> Fraction:
    """Free eigenvalue of Z in terms of the multiplicities of -1 and lambda* itself."""
    _check_dims(p, n)
    if m_minus < 0 or m_star < 0 or m_minus + m_star > p:
        raise InvalidMultiplicities(f"need m_minus, m_star >= 0 and m_minus + m_star <= {p}")
    return Fraction(2 * n - 2 * p - 1 + 2 * m_minus + m_star, p + 2 + m_star)


def ip_objective(p: int, n: int, m_minus: int, m_star: int, m_plus: int) -> tuple[Fraction, Fraction]:
    """Exact objective g and trace Z for one multiplicity triple."""
    if m_minus + m_star + m_plus != p or min(m_minus, m_star, m_plus) < 0:
        raise InvalidMultiplicities(f"({m_minus}, {m_star}, {m_plus}) does not partition p={p}")
    lam = lambda_star(p, n, m_minus, m_star)
    tr = -m_minus + lam * m_star + m_plus
    tr2 = m_minus + lam * lam * m_star + m_plus
    g = (n - Fraction(p + 1, 2)) * tr - Fraction(p + 2, 4) * tr2 - Fraction(1, 4) * tr * tr + (1 - n + p) * p
    return g, tr


@dataclass(frozen=True)
class StabilityReport:
    p: int
    n: int
    optimal_multiplicities: tuple[int, int, int]
    lambda_star: Fraction
    optimal_objective: Fraction
    agas_guaranteed: bool
    optima: tuple[tuple[int, int, int], ...] = ()

    @property
    def m_minus(self) -> int:
        return self.optimal_multiplicities[0]

    @property
    def m_star(self) -> int:
        return self.optimal_multiplicities[1]

    @property
    def m_plus(self) -> int:
        return self.optimal_multiplicities[2]


def is_feasible(p: int, n: int, m_minus: int, m_star: int) -> bool:
    """A triple is realisable only if lambda* is an eigenvalue of a contraction.

    Z = X^T Y has spectral norm at most 1, so lambda* must lie in [-1, 1]
    whenever it occurs (m_star > 0).
    """
    if m_star == 0:
        return True
    lam = lambda_star(p, n, m_minus, m_star)
    return -1 <= lam <= 1


def integer_program(p: int, n: int) -> StabilityReport:
    """Solve the multiplicity integer program by exhaustive enumeration in rationals.

    Triples whose lambda* falls outside [-1, 1] are discarded as infeasible.

    Ties are broken by largest m_plus, then smallest m_minus. Raises
    ``ArithmeticError`` if an optimum has m_minus > 0 or if the m_minus = 0
    closed form disagrees with the direct objective; neither happens for
    valid (p, n).
    """
    _check_dims(p, n)
    scored = []
    for m_minus in range(p + 1):
        for m_star in range(p + 1 - m_minus):
            m_plus = p - m_minus - m_star
            if m_star and not is_feasible(p, n, m_minus, m_star):
                continue
            g, tr = ip_objective(p, n, m_minus, m_star, m_plus)
            if m_minus == 0:
                closed = Fraction(1, 2) * (n - Fraction(3, 2) * (p + 1)) * (tr - p)
                if closed != g:
                    raise ArithmeticError(f"closed form mismatch at (0, {m_star}, {m_plus}): {closed} != {g}")
            scored.append((g, (m_minus, m_star, m_plus)))
    best = max(g for g, _ in scored)
    optima = tuple(sorted((m for g, m in scored if g == best), key=lambda m: (-m[2], m[0])))
    if any(m[0] != 0 for m in optima):
        raise ArithmeticError(f"optimum with m_minus > 0 for (p, n) = ({p}, {n}): {optima}")
    chosen = optima[0]
    return StabilityReport(
        p=p,
        n=n,
        optimal_multiplicities=chosen,
        lambda_star=lambda_star(p, n, chosen[0], chosen[1]),
        optimal_objective=best,
        agas_guaranteed=classify(p, n),
        optima=optima,
    )


def classify(p: int, n: int) -> bool:
    """True iff p <= 2n/3 - 1, evaluated as 3p <= 2n - 3."""
    _check_dims(p, n)
    return 3 * p <= 2 * n - 3


def _f_grads(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, p = X.shape
    c = float(np.sum(X * Y))
    k = n - (p + 1) / 2 - 0.5 * c
    gX = k * Y - (p + 2) / 2 * Y @ (Y.T @ X)
    gY = k * X - (p + 2) / 2 * X @ (X.T @ Y)
    return gX, gY


def f_ascent(X: np.ndarray, Y: np.ndarray, steps: int = 500, step: float = 0.1) -> tuple[np.ndarray, np.ndarray, float]:
    """Riemannian gradient ascent on f over St(p,n) x St(p,n) with backtracking."""
    X = np.array(X, dtype=float)
    Y = np.array(Y, dtype=float)
    val = float(f_bound_array(X, Y))
    for _ in range(steps):
        gX, gY = _f_grads(X, Y)
        tX, tY = project_array(gX, X), project_array(gY, Y)
        if np.sqrt(np.sum(tX * tX) + np.sum(tY * tY)) < 1e-13:
            break
        h = step
        while h > 1e-12:
            Xn, Yn = qr_retract_array(X + h * tX), qr_retract_array(Y + h * tY)
            new = float(f_bound_array(Xn, Yn))
            if new > val:
                X, Y, val = Xn, Yn, new
                break
            h *= 0.5
        else:
            break
    return X, Y, val


@dataclass(frozen=True)
class FBoundSearch:
    p: int
    n: int
    samples: int
    sampled_max: float
    ascended_max: float


def f_bound_search(p: int, n: int, rng: np.random.Generator, samples: int = 100_000, ascent_steps: int = 500) -> FBoundSearch:
    """Monte Carlo maximum of f over Haar pairs, refined by local ascent from the best pair."""
    if not 1 <= p <= n:
        raise InvalidDimensions(f"need 1 <= p <= n, got p={p}, n={n}")
    X = haar_array(rng, n, p, (samples,))
    Y = haar_array(rng, n, p, (samples,))
    vals = f_bound_array(X, Y)
    b = int(np.argmax(vals))
    _, _, asc = f_ascent(X[b], Y[b], steps=ascent_steps)
    return FBoundSearch(p, n, samples, float(vals[b]), max(asc, float(vals[b])))
