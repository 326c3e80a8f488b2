import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sbmboot as sb
from sbmboot.errors import ResourceLimitError
from sbmboot.sbm import check_graph_invariants, from_edges


def test_validate_accepts_single_community():
    params = sb.SbmParams(sizes=[100], edge_probs=[[0.05]], r=2, seeds=[3])
    assert sb.validate_params(params) == []


def test_validate_flags_assortativity_as_warning():
    params = sb.SbmParams(sizes=[50, 50],
                          edge_probs=[[0.05, 0.9], [0.9, 0.05]],
                          r=2, seeds=[1, 1])
    findings = sb.validate_params(params)
    assert [v.severity for v in findings] == ["warning"]
    assert "assortativity" in findings[0].message
    assert findings[0].where == (0, 1)


def test_validate_flags_seed_overflow_as_error():
    params = sb.SbmParams(sizes=[10], edge_probs=[[0.1]], r=2, seeds=[11])
    findings = sb.validate_params(params)
    assert any(v.severity == "error" and "seed count" in v.message
               for v in findings)


def test_validate_flags_asymmetry_and_range():
    params = sb.SbmParams(sizes=[5, 5], edge_probs=[[0.1, 0.2], [0.3, 0.1]],
                          r=2, seeds=[0, 0])
    codes = {v.code for v in sb.validate_params(params)}
    assert "q-symmetry" in codes
    params = sb.SbmParams(sizes=[5], edge_probs=[[1.0]], r=2, seeds=[0])
    codes = {v.code for v in sb.validate_params(params)}
    assert "q-range" in codes


def test_validate_warns_on_disconnected_community_graph():
    params = sb.SbmParams(sizes=[5, 5], edge_probs=[[0.1, 0.0], [0.0, 0.1]],
                          r=2, seeds=[0, 0])
    codes = {v.code for v in sb.validate_params(params)}
    assert "community-graph-disconnected" in codes


def test_zero_probability_gives_edgeless_graph():
    params = sb.SbmParams(sizes=[100], edge_probs=[[0.0]], r=2, seeds=[0])
    g = sb.generate_sbm(params, seed=4)
    assert g.num_edges == 0


def test_near_one_probability_gives_near_complete_graph():
    eps = 1e-9
    params = sb.SbmParams(sizes=[10], edge_probs=[[1.0 - eps]], r=2, seeds=[0])
    g = sb.generate_sbm(params, seed=4)
    assert g.num_edges == 45  # all pairs; P(missing any) ~ 45 eps


def test_cross_edge_count_within_4_sigma():
    params = sb.SbmParams(sizes=[1000, 1000],
                          edge_probs=[[0.01, 0.002], [0.002, 0.01]],
                          r=2, seeds=[0, 0])
    g = sb.generate_sbm(params, seed=3)
    pairs = g.edge_pairs()
    lab = g.labels[pairs]
    cross = int(np.sum(lab[:, 0] != lab[:, 1]))
    mean = 1000 * 1000 * 0.002
    sigma = np.sqrt(mean * (1 - 0.002))
    assert abs(cross - mean) < 4 * sigma


def test_generation_deterministic_and_structurally_sound():
    params = sb.SbmParams(sizes=[300, 200],
                          edge_probs=[[0.05, 0.01], [0.01, 0.04]],
                          r=2, seeds=[2, 2])
    g1 = sb.generate_sbm(params, seed=12)
    g2 = sb.generate_sbm(params, seed=12)
    assert np.array_equal(g1.indptr, g2.indptr)
    assert np.array_equal(g1.indices, g2.indices)
    check_graph_invariants(g1)
    g3 = sb.generate_sbm(params, seed=13)
    assert not np.array_equal(g1.indices, g3.indices)


def test_mean_degree_within_4_sigma_per_community():
    sizes = [800, 1200]
    q = np.array([[0.02, 0.005], [0.005, 0.03]])
    params = sb.SbmParams(sizes=sizes, edge_probs=q, r=2, seeds=[0, 0])
    g = sb.generate_sbm(params, seed=77)
    deg = np.diff(g.indptr)
    for i in range(2):
        lo, hi = g.community_range(i)
        emp = float(np.mean(deg[lo:hi]))
        n_i = sizes[i]
        expect = (n_i - 1) * q[i, i] + sum(sizes[j] * q[i, j]
                                           for j in range(2) if j != i)
        # mean degree averages 2*Bin(intra pairs) + Bin(cross pairs) edges
        var = (4 * (n_i * (n_i - 1) / 2) * q[i, i] * (1 - q[i, i])
               + sum(n_i * sizes[j] * q[i, j] * (1 - q[i, j])
                     for j in range(2) if j != i)) / n_i ** 2
        assert abs(emp - expect) < 4 * np.sqrt(var)


def test_expected_edge_cap_enforcement():
    params = sb.SbmParams(sizes=[10_000], edge_probs=[[0.5]], r=2, seeds=[0])
    with pytest.raises(ResourceLimitError):
        sb.generate_sbm(params, seed=0, max_expected_edges=1e6)


def test_select_seeds_bounds_and_determinism():
    params = sb.SbmParams(sizes=[10, 10],
                          edge_probs=[[0.1, 0.05], [0.05, 0.1]],
                          r=2, seeds=[0, 0])
    g = sb.generate_sbm(params, seed=5)
    assert sb.select_seeds(g, [0, 0], seed=1).size == 0
    full = sb.select_seeds(g, [10, 10], seed=1)
    assert np.array_equal(full, np.arange(20))
    s1 = sb.select_seeds(g, [3, 2], seed=9)
    s2 = sb.select_seeds(g, [3, 2], seed=9)
    assert np.array_equal(s1, s2)
    assert np.array_equal(g.labels[s1], [0, 0, 0, 1, 1])
    with pytest.raises(ValueError):
        sb.select_seeds(g, [11, 0], seed=1)


def test_select_seeds_uniform_inclusion_frequency():
    params = sb.SbmParams(sizes=[10, 10],
                          edge_probs=[[0.1, 0.05], [0.05, 0.1]],
                          r=2, seeds=[2, 0])
    g = sb.generate_sbm(params, seed=5)
    hits = np.zeros(20)
    draws = 10_000
    for i in range(draws):
        hits[sb.select_seeds(g, [2, 0], seed=i)] += 1
    freq = hits / draws
    assert np.all(np.abs(freq[:10] - 0.2) < 0.02)
    assert np.all(freq[10:] == 0.0)


def test_graph_dump_load_roundtrip(tmp_path):
    params = sb.SbmParams(sizes=[40, 30],
                          edge_probs=[[0.2, 0.05], [0.05, 0.15]],
                          r=3, seeds=[2, 1])
    g = sb.generate_sbm(params, seed=123)
    path = tmp_path / "graph.txt"
    sb.save_graph(g, str(path))
    g2 = sb.load_graph(str(path))
    assert g2.params == g.params
    assert g2.rng_seed == g.rng_seed
    assert np.array_equal(g.edge_pairs(), g2.edge_pairs())
    assert np.array_equal(g.offsets, g2.offsets)


def test_from_edges_rejects_self_loops():
    with pytest.raises(ValueError):
        from_edges([3], 2, [(0, 0)])


def test_edgeless_graph_roundtrip(tmp_path):
    params = sb.SbmParams(sizes=[5, 4], edge_probs=[[0.0, 0.0], [0.0, 0.0]],
                          r=2, seeds=[1, 0])
    g = sb.generate_sbm(params, seed=8)
    path = tmp_path / "empty.txt"
    sb.save_graph(g, str(path))
    g2 = sb.load_graph(str(path))
    assert g2.num_edges == 0
    assert g2.params == g.params
    assert np.array_equal(g2.offsets, g.offsets)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.floats(0.0, 0.8), st.integers(0, 2 ** 32 - 1))
def test_generated_graphs_always_structurally_valid(n, p, seed):
    params = sb.SbmParams(sizes=[n], edge_probs=[[p]], r=2, seeds=[0])
    g = sb.generate_sbm(params, seed=seed)
    check_graph_invariants(g)


@pytest.mark.slow
def test_million_node_generation_and_run():
    # pair indices here exceed 32 bits, exercising the int64 decode path
    n = 1_000_000
    p = 2.0e-5
    params = sb.SbmParams(sizes=[n], edge_probs=[[p]], r=2, seeds=[50])
    g = sb.generate_sbm(params, seed=99)
    mean_deg = 2 * g.num_edges / n
    expect = (n - 1) * p
    assert abs(mean_deg - expect) < 0.05 * expect
    seeds = sb.select_seeds(g, [50], seed=3)
    res = sb.run_bootstrap(g, seeds, rng_seed=1)
    # 50 seeds at scale g ~ 1250 is deeply subcritical: no spread blowup
    assert res.final_size < 5_000
    assert res.termination_time == res.final_size
