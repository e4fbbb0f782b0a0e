"""Equilibrium certificates and the canonical splay-state constructions on the ring H_N."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Configuration, _check_sizes, _Kernel, max_pairwise_distance_array
from .errors import InvalidSize
from .graph import WeightedGraph
from .manifold import skew


@dataclass(frozen=True)
class EquilibriumCertificate:
    """Residual of the flow and the multiplier matrices Gamma_i = S_i^T sum_j a_ij S_j.

    At an equilibrium sum_j a_ij S_j = S_i Gamma_i with Gamma_i symmetric, so
    both ``residual`` and ``gamma_asymmetry`` vanish.
    """

    residual: float
    gamma: tuple[np.ndarray, ...]
    gamma_asymmetry: float
    tol: float

    @property
    def is_equilibrium(self) -> bool:
        return self.residual <= self.tol


def equilibrium_check(c: Configuration, g: WeightedGraph, tol: float = 1e-10) -> EquilibriumCertificate:
    _check_sizes(c, g)
    kernel = _Kernel(g)
    F = kernel.descent(c.data)
    Sigma = kernel.coupling(c.data)
    gamma = np.swapaxes(c.data, -1, -2) @ Sigma
    asym = float(np.max(np.linalg.norm(skew(gamma), axis=(-2, -1)))) if c.N else 0.0
    residual = float(np.sqrt(np.sum(F * F)))
    return EquilibriumCertificate(residual, tuple(gamma), asym, tol)


def _phases(N: int) -> np.ndarray:
    if N < 3:
        raise InvalidSize(f"splay states need N >= 3, got {N}")
    return 2 * np.pi * np.arange(N) / N


def splay_circle(N: int) -> Configuration:
    """N agents on St(1,2) at angles 2*pi*i/N."""
    th = _phases(N)
    return Configuration(np.stack([np.cos(th), np.sin(th)], axis=1)[:, :, None])


def splay_sphere(N: int) -> Configuration:
    """The circle splay embedded in the equator of St(1,3)."""
    th = _phases(N)
    return Configuration(np.stack([np.cos(th), np.sin(th), np.zeros(N)], axis=1)[:, :, None])


def splay_st23(N: int) -> Configuration:
    """St(2,3) splay: first columns all e3, second columns equidistant on the equator."""
    th = _phases(N)
    S = np.zeros((N, 3, 2))
    S[:, 2, 0] = 1.0
    S[:, 0, 1] = np.cos(th)
    S[:, 1, 1] = np.sin(th)
    return Configuration(S)


SPLAY_BUILDERS = {
    "splay_circle": splay_circle,
    "splay_sphere": splay_sphere,
    "splay_st23": splay_st23,
}


def distance_to_consensus(c: Configuration) -> float:
    """Max chordal distance over all agent pairs; zero exactly on the consensus set."""
    return float(max_pairwise_distance_array(c.data))


def pairwise_distances_array(S: np.ndarray) -> np.ndarray:
    """Sorted all-pairs chordal distances, batched over leading axes."""
    N = S.shape[-3]
    i, j = np.triu_indices(N, 1)
    d = S[..., i, :, :] - S[..., j, :, :]
    return np.sort(np.sqrt(np.sum(d * d, axis=(-2, -1))), axis=-1)


def splay_signature(N: int) -> np.ndarray:
    """Sorted pairwise chord lengths of the N-th roots of unity."""
    return pairwise_distances_array(splay_circle(N).data)


def splay_signature_error_array(S: np.ndarray) -> np.ndarray:
    """Max deviation of each configuration's pairwise-distance multiset from the splay one."""
    ref = splay_signature(S.shape[-3])
    return np.max(np.abs(pairwise_distances_array(S) - ref), axis=-1)
