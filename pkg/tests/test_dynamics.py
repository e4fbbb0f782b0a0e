import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import consensus_config, random_config, random_weighted
from stiefel_kuramoto.dynamics import (
    Configuration,
    FrequencySet,
    flow_field,
    gradient,
    integrate,
    potential,
    random_skew,
    rotating_frame,
    sync_state,
)
from stiefel_kuramoto.equilibria import splay_circle, splay_st23
from stiefel_kuramoto.errors import NotOrthonormal, NotSkew, SizeMismatch
from stiefel_kuramoto.graph import WeightedGraph, complete_graph, cycle_graph
from stiefel_kuramoto.manifold import orthonormality_defect


def edges_of(g):
    return list(g.edges)


def test_configuration_validation():
    with pytest.raises(NotOrthonormal):
        Configuration(np.ones((2, 2, 1)))
    c = Configuration.from_points([np.eye(3)[:, :2], np.eye(3)[:, 1:]])
    assert (c.N, c.n, c.p) == (2, 3, 2)


def test_potential_examples():
    g = complete_graph(2)
    same = Configuration(np.array([[[1.0], [0.0]], [[1.0], [0.0]]]))
    anti = Configuration(np.array([[[1.0], [0.0]], [[-1.0], [0.0]]]))
    assert potential(same, g) == 0.0
    assert potential(anti, g) == pytest.approx(4.0)
    assert potential(splay_st23(5), cycle_graph(5)) == pytest.approx(2 * 5 * (1 - np.cos(2 * np.pi / 5)), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(2, 1), (3, 2), (4, 3)]), st.integers(2, 7), st.integers(0, 10**6))
def test_potential_matches_edge_loop(dims, N, seed):
    rng = np.random.default_rng(seed)
    g = random_weighted(rng, N, "complete")
    c = random_config(rng, N, *dims)
    assert potential(c, g) == pytest.approx(oracles.potential(list(c.data), edges_of(g)), rel=1e-12)
    assert potential(c, g) >= 0


def test_gradient_matches_polar_finite_differences(rng):
    for (n, p), N, fam in [((3, 2), 5, "cycle"), ((4, 1), 4, "complete"), ((5, 3), 3, "cycle")]:
        g = random_weighted(rng, N, fam)
        c = random_config(rng, N, n, p)
        grads = gradient(c, g)
        for i, G in enumerate(grads):
            assert G.tangency_defect() <= 1e-12
            T = oracles.proj(rng.standard_normal((n, p)), c.data[i])
            fd = oracles.fd_directional(list(c.data), edges_of(g), i, T)
            assert np.sum(G.data * T) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_gradient_vanishes_at_consensus_and_antipodes(rng):
    c = consensus_config(rng, 6, 4, 2)
    assert max(np.abs(G.data).max() for G in gradient(c, complete_graph(6))) <= 1e-12
    anti = Configuration(np.array([[[1.0], [0.0]], [[-1.0], [0.0]]]))
    assert max(np.abs(G.data).max() for G in gradient(anti, complete_graph(2))) <= 1e-15


def test_sphere_field_closed_form(rng):
    N, n = 5, 3
    g = random_weighted(rng, N, "cycle")
    c = random_config(rng, N, n, 1)
    omega = np.array([random_skew(rng, n) for _ in range(N)])
    f = FrequencySet(omega, np.zeros((N, 1, 1)))
    F = flow_field(c, g, f)
    A = g.adjacency()
    x = c.data[:, :, 0]
    for i in range(N):
        expect = omega[i] @ x[i] + sum(A[i, j] * (x[j] - (x[i] @ x[j]) * x[i]) for j in range(N))
        assert np.allclose(F[i].data[:, 0], expect, atol=1e-13)


def test_field_without_frequencies_equals_zero_frequencies(rng):
    c = random_config(rng, 4, 3, 2)
    g = cycle_graph(4)
    a = flow_field(c, g)
    b = flow_field(c, g, FrequencySet.zeros(4, 3, 2))
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))
    assert all(np.allclose(x.data, -G.data) for x, G in zip(a, gradient(c, g)))


def test_drift_is_tangent(rng):
    N, n, p = 4, 5, 3
    c = random_config(rng, N, n, p)
    omega = np.array([random_skew(rng, n, 2.0) for _ in range(N)])
    xi = np.array([random_skew(rng, p, 2.0) for _ in range(N)])
    F = flow_field(c, WeightedGraph(N, ()), FrequencySet(omega, xi))
    assert max(v.tangency_defect() for v in F) <= 1e-12


def test_frequency_and_size_validation():
    with pytest.raises(NotSkew):
        FrequencySet(np.ones((2, 2, 2)), np.zeros((2, 1, 1)))
    c = splay_circle(5)
    with pytest.raises(SizeMismatch):
        potential(c, cycle_graph(4))
    with pytest.raises(SizeMismatch):
        flow_field(c, cycle_graph(5), FrequencySet.zeros(5, 3, 1))


def test_single_oscillator_rotates_at_omega():
    w = 0.7
    f = FrequencySet(np.array([[[0.0, -w], [w, 0.0]]]), np.zeros((1, 1, 1)))
    c0 = Configuration(np.array([[[1.0], [0.0]]]))
    tr = integrate(c0, WeightedGraph(1, ()), f, t_end=3.0, dt=0.01, record_every=50)
    for t, c in zip(tr.times, tr.states):
        angle = np.arctan2(c.data[0, 1, 0], c.data[0, 0, 0])
        assert angle == pytest.approx(w * t, abs=1e-6)


def test_zero_horizon_and_record_schedule(rng):
    c0 = random_config(rng, 4, 3, 1)
    g = cycle_graph(4)
    tr = integrate(c0, g, t_end=0.0)
    assert len(tr) == 1 and np.array_equal(tr.final.data, c0.data)
    tr = integrate(c0, g, t_end=1.0, dt=0.1, record_every=3)
    assert np.allclose(tr.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    tr = integrate(c0, g, t_end=0.25, dt=0.1)
    assert np.allclose(tr.times, [0.0, 0.1, 0.2, 0.25])
    assert np.all(np.diff(tr.times) > 0)
    with pytest.raises(ValueError):
        integrate(c0, g, t_end=1.0, dt=0.0)


def test_descent_and_orthonormality(rng):
    g = random_weighted(rng, 6, "complete")
    tr = integrate(random_config(rng, 6, 4, 2), g, t_end=5.0, dt=0.01)
    assert np.all(np.diff(tr.potential_values) <= 1e-10)
    assert max(orthonormality_defect(c.data).max() for c in tr.states) <= 1e-12


def test_energy_audit(rng):
    # dV/dt = -2 sum_i ||grad_i||^2 since the flow descends V/2
    g = cycle_graph(5)
    tr = integrate(random_config(rng, 5, 3, 2), g, t_end=2.0, dt=0.001, record_every=1)
    rate = np.array([2 * sum(np.sum(G.data ** 2) for G in gradient(c, g)) for c in tr.states])
    dissipated = np.sum(0.5 * (rate[1:] + rate[:-1]) * np.diff(tr.times))
    drop = tr.potential_values[0] - tr.potential_values[-1]
    assert dissipated == pytest.approx(drop, rel=1e-4)


def test_equivariance_under_orthogonal_actions(rng):
    N, n, p = 5, 4, 2
    g = random_weighted(rng, N, "cycle")
    S0 = random_config(rng, N, n, p).data
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    R = np.linalg.qr(rng.standard_normal((p, p)))[0]
    base = integrate(Configuration(S0), g, t_end=5.0, dt=0.01).final.data
    moved = integrate(Configuration(Q @ S0 @ R), g, t_end=5.0, dt=0.01).final.data
    assert np.max(np.abs(moved - Q @ base @ R)) <= 1e-6


def test_consensus_is_invariant(rng):
    c0 = consensus_config(rng, 5, 3, 2)
    tr = integrate(c0, complete_graph(5), t_end=2.0, dt=0.01)
    assert np.max(np.abs(tr.final.data - c0.data)) <= 1e-12


def test_heterogeneous_frequencies_keep_invariants(rng):
    N, n, p = 4, 4, 2
    f = FrequencySet(
        np.array([random_skew(rng, n) for _ in range(N)]),
        np.array([random_skew(rng, p) for _ in range(N)]),
    )
    tr = integrate(random_config(rng, N, n, p), cycle_graph(N), f, t_end=5.0, dt=0.01, record_every=10)
    assert max(orthonormality_defect(c.data).max() for c in tr.states) <= 1e-12


def test_rotating_frame_identity_and_invariants(rng):
    tr = integrate(random_config(rng, 4, 3, 2), cycle_graph(4), t_end=1.0, dt=0.05)
    same = rotating_frame(tr, np.zeros((3, 3)), np.zeros((2, 2)))
    assert all(np.allclose(a.data, b.data, atol=1e-15) for a, b in zip(tr.states, same.states))
    turned = rotating_frame(tr, random_skew(rng, 3), random_skew(rng, 2))
    assert max(orthonormality_defect(c.data).max() for c in turned.states) <= 1e-12
    with pytest.raises(NotSkew):
        rotating_frame(tr, np.eye(3), np.zeros((2, 2)))


def test_sync_state_examples(rng):
    assert sync_state(consensus_config(rng, 5, 3, 2))
    assert not sync_state(splay_circle(5))
    with pytest.raises(ValueError):
        sync_state(splay_circle(5), eps=0.0)


def test_sync_state_bounds_potential(rng):
    eps = 1e-6
    N = 6
    g = random_weighted(rng, N, "complete")
    base = random_config(rng, 1, 4, 2).data[0]
    S = np.array([base + 1e-8 * oracles.proj(rng.standard_normal((4, 2)), base) for _ in range(N)])
    S = np.array([oracles.polar(s, np.zeros_like(s), 0.0) for s in S])
    c = Configuration(S)
    assert sync_state(c, eps)
    assert potential(c, g) <= N ** 2 * g.max_weight() * eps ** 2
