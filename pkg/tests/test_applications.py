"""Application builders: label propagation, PageRank, sweeps, ingestion."""

from __future__ import annotations

import numpy as np
import pytest

from qdsfm.applications import (
    Hypergraph,
    LabeledDataset,
    adjacency_multiply,
    argmax_classify,
    build_pagerank_instance,
    build_ssl_instance,
    cheeger_sweep,
    generate_synthetic_hypergraph,
    ingest_tabular_dataset,
    pagerank_residual,
    ssl_score_matrix,
)
from qdsfm.solvers import SolveConfig, primal_objective, solve
from qdsfm.submodular import graph_edge_cut, hyperedge_cut, lovasz_extension

# ---------------------------------------------------------------------------
# domain types


def test_hypergraph_degrees():
    hg = Hypergraph(
        4, (hyperedge_cut([0, 1, 2]), graph_edge_cut(1, 3, weight=4.0))
    )
    assert np.array_equal(hg.degrees, [1, 2, 1, 1])
    assert np.array_equal(hg.weighted_degrees, [1, 5, 1, 4])
    assert hg.r == 2
    with pytest.raises(ValueError, match="hyperedge 0"):
        Hypergraph(2, (hyperedge_cut([0, 5]),))
    with pytest.raises(ValueError, match="cut"):
        from qdsfm.submodular import general_oracle

        Hypergraph(2, (general_oracle([0, 1], table={0: 0.0, 1: 1.0, 2: 1.0, 3: 0.0}),))


def test_labeled_dataset():
    ds = LabeledDataset(5, {0: 1, 3: 0})
    assert ds.num_classes == 2
    assert np.array_equal(ds.anchor(1), [1, 0, 0, -1, 0])
    assert np.array_equal(ds.anchor(0), [-1, 0, 0, 1, 0])
    assert np.array_equal(ds.class_counts(), [1, 1])
    ds3 = LabeledDataset(4, {0: 2}, num_classes=3)
    assert np.array_equal(ds3.anchor(1), [-1, 0, 0, 0])
    with pytest.raises(ValueError):
        LabeledDataset(3, {5: 0})
    with pytest.raises(ValueError):
        LabeledDataset(3, {0: 4}, num_classes=2)
    with pytest.raises(ValueError):
        LabeledDataset(3, {}, num_classes=1)
    with pytest.raises(ValueError):
        ds.anchor(2)


# ---------------------------------------------------------------------------
# label propagation


def test_ssl_identity_reduces_to_symmetric_edge_problem():
    hg = Hypergraph(2, (hyperedge_cut([0, 1]),))
    inst, back = build_ssl_instance(hg, {0: 1, 1: 0}, k=1, beta=1.0, normalization="identity")
    assert np.array_equal(inst.a, [1.0, -1.0])
    assert np.array_equal(inst.w, [1.0, 1.0])
    res = solve(inst, SolveConfig(max_iters=5, target_gap=1e-12))
    assert np.allclose(res.x, [1 / 3, -1 / 3], atol=1e-10)
    assert res.x[0] == pytest.approx(-res.x[1])  # symmetric under sign flip
    assert np.array_equal(back(res.x), res.x)  # identity weights


def test_ssl_no_labels_gives_zero_scores():
    hg = Hypergraph(3, (hyperedge_cut([0, 1, 2]),))
    inst, _ = build_ssl_instance(hg, {}, k=1, beta=2.0, normalization="identity")
    res = solve(inst, SolveConfig(max_iters=10, target_gap=1e-14))
    assert np.allclose(res.x, 0.0, atol=1e-12)


def test_ssl_large_beta_pins_scores_to_anchor():
    hg = Hypergraph(3, (hyperedge_cut([0, 1, 2]),))
    beta = 1e6
    inst, _ = build_ssl_instance(hg, {0: 1, 1: 0}, k=1, beta=beta, normalization="identity")
    res = solve(inst, SolveConfig(max_iters=200, target_gap=1e-16))
    assert np.max(np.abs(res.x - inst.a)) <= 10.0 / beta


def test_ssl_degree_normalization_and_back_transform():
    hg = Hypergraph(
        4, (hyperedge_cut([0, 1, 2]), hyperedge_cut([1, 2, 3]), graph_edge_cut(0, 3))
    )
    ds = LabeledDataset(4, {0: 1, 3: 0})
    beta = 0.5
    inst, back = build_ssl_instance(hg, ds, k=1, beta=beta)
    assert np.array_equal(inst.w, beta * hg.degrees)
    res = solve(inst, SolveConfig(max_iters=2000, target_gap=1e-13))
    x_orig = back(res.x)
    # the built objective at scores equals the raw objective at W^{1/2}·scores
    raw = beta * float(np.sum((x_orig - ds.anchor(1)) ** 2))
    sqrt_w = np.sqrt(hg.degrees)
    for edge in hg.edges:
        vals = x_orig[edge.members_arr] / sqrt_w[edge.members_arr]
        raw += edge.weight * (vals.max() - vals.min()) ** 2
    assert primal_objective(inst, res.x) == pytest.approx(raw, abs=1e-9)


def test_ssl_rejects_uncovered_vertex_and_bad_args():
    hg = Hypergraph(3, (graph_edge_cut(0, 1),))
    with pytest.raises(ValueError, match="vertex 2"):
        build_ssl_instance(hg, {0: 1}, k=1, beta=1.0)
    with pytest.raises(ValueError):
        build_ssl_instance(hg, {0: 1}, k=1, beta=0.0, normalization="identity")
    with pytest.raises(ValueError):
        build_ssl_instance(hg, {0: 1}, k=1, beta=1.0, normalization="cosine")
    with pytest.raises(ValueError, match="samples"):
        build_ssl_instance(hg, LabeledDataset(5, {0: 1}), k=1, beta=1.0, normalization="identity")


def test_ssl_two_cluster_recovery():
    hg, ds, truth = generate_synthetic_hypergraph(
        n=40, within_per_cluster=30, across=5, edge_size=4, labeled_per_cluster=3, seed=0
    )
    cfg = SolveConfig(max_iters=400 * hg.r, target_gap=1e-9, seed=1)
    scores = ssl_score_matrix(hg, ds, beta=0.05, config=cfg)
    # the two per-class problems are sign-mirrored
    assert np.allclose(scores[0], -scores[1], atol=1e-6)
    pred_argmax = argmax_classify(scores)
    assert np.mean(pred_argmax != truth) <= 0.15
    sweep = cheeger_sweep(hg, hg.degrees, np.sqrt(hg.degrees) * scores[1])
    pred_sweep = sweep.labels(prefix_class=1)
    assert np.mean(pred_sweep != truth) <= 0.15
    for i, k in ds.labels.items():
        assert pred_argmax[i] == k


# ---------------------------------------------------------------------------
# PageRank


def _pagerank_direct(hg: Hypergraph, alpha: float, s: np.ndarray) -> np.ndarray:
    d = hg.weighted_degrees
    A = np.zeros((hg.n, hg.n))
    for e in hg.edges:
        i, j = e.members
        A[i, j] += e.weight
        A[j, i] += e.weight
    M = np.eye(hg.n) - alpha * A / d[None, :]
    return (1.0 - alpha) * np.linalg.solve(M, s)


def test_pagerank_two_vertex_fixed_point():
    hg = Hypergraph(2, (graph_edge_cut(0, 1),))
    s = np.array([1.0, 0.0])
    inst, back = build_pagerank_instance(hg, 0.5, s)
    res = solve(inst, SolveConfig(max_iters=50, target_gap=1e-14))
    p = back(res.x)
    assert np.allclose(p, [2 / 3, 1 / 3], atol=1e-7)
    assert pagerank_residual(hg, 0.5, s, p) <= 1e-6
    assert np.allclose(p, _pagerank_direct(hg, 0.5, s), atol=1e-6)


def test_pagerank_small_alpha_returns_seed():
    hg = Hypergraph(3, (graph_edge_cut(0, 1), graph_edge_cut(1, 2)))
    s = np.array([0.2, 0.5, 0.3])
    alpha = 1e-6
    inst, back = build_pagerank_instance(hg, alpha, s)
    res = solve(inst, SolveConfig(max_iters=500, target_gap=1e-18))
    assert np.max(np.abs(back(res.x) - s)) <= 1e-4


def test_pagerank_cycle_preserves_mass():
    hg = Hypergraph(3, (graph_edge_cut(0, 1), graph_edge_cut(1, 2), graph_edge_cut(0, 2)))
    s = np.array([0.5, 0.3, 0.2])
    for alpha in (0.5, 0.9):
        inst, back = build_pagerank_instance(hg, alpha, s)
        res = solve(inst, SolveConfig(max_iters=4000, target_gap=1e-14))
        p = back(res.x)
        assert np.sum(p) == pytest.approx(np.sum(s), abs=1e-6)
        assert np.allclose(p, _pagerank_direct(hg, alpha, s), atol=1e-6)


def test_pagerank_validation():
    hg = Hypergraph(3, (graph_edge_cut(0, 1),))  # vertex 2 isolated
    with pytest.raises(ValueError, match="degree zero"):
        build_pagerank_instance(hg, 0.5, np.ones(3) / 3)
    good = Hypergraph(2, (graph_edge_cut(0, 1),))
    for bad_alpha in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            build_pagerank_instance(good, bad_alpha, np.ones(2) / 2)
    with pytest.raises(ValueError, match="edge"):
        build_pagerank_instance(
            Hypergraph(3, (hyperedge_cut([0, 1, 2]),)), 0.5, np.ones(3) / 3
        )
    with pytest.raises(ValueError, match="shape"):
        build_pagerank_instance(good, 0.5, np.ones(3))
    assert np.allclose(
        adjacency_multiply(good, np.array([2.0, 5.0])), [5.0, 2.0]
    )


# ---------------------------------------------------------------------------
# sweep cuts


def _brute_conductance(hg: Hypergraph, prefix: set[int]) -> float:
    crossing = 0
    vol_in = 0
    total = 0
    for e in hg.edges:
        inside = len(set(e.members) & prefix)
        if 0 < inside < e.size:
            crossing += 1
        vol_in += inside
        total += e.size
    denom = min(vol_in, total - vol_in)
    return crossing / denom if denom > 0 else np.inf


def test_sweep_disjoint_hyperedges_finds_zero_cut():
    hg = Hypergraph(4, (hyperedge_cut([0, 1]), hyperedge_cut([2, 3])))
    sweep = cheeger_sweep(hg, None, np.array([1.0, 1.0, 0.0, 0.0]))
    assert np.array_equal(sweep.order, [0, 1, 2, 3])  # ties keep index order
    assert sweep.best_index == 2
    assert sweep.conductance == 0.0
    assert set(sweep.prefix) == {0, 1}
    assert np.array_equal(sweep.labels(), [1, 1, 0, 0])
    assert np.array_equal(sweep.labels(prefix_class=0), [0, 0, 1, 1])


def test_sweep_single_edge_conductance_one():
    hg = Hypergraph(2, (hyperedge_cut([0, 1]),))
    sweep = cheeger_sweep(hg, np.ones(2), np.array([1.0, 0.0]))
    assert sweep.best_index == 1
    assert sweep.conductance == 1.0


def test_sweep_matches_bruteforce():
    rng = np.random.default_rng(6)
    for _ in range(5):
        n = 12
        edges = []
        for _ in range(8):
            size = int(rng.integers(2, 5))
            edges.append(hyperedge_cut(sorted(rng.choice(n, size, replace=False).tolist())))
        hg = Hypergraph(n, tuple(edges))
        w = rng.uniform(0.5, 3.0, size=n)
        x = rng.normal(size=n)
        sweep = cheeger_sweep(hg, w, x)
        scores = x / np.sqrt(w)
        order = np.argsort(-scores, kind="stable")
        assert np.array_equal(sweep.order, order)
        expected = np.array(
            [_brute_conductance(hg, set(order[:j].tolist())) for j in range(1, n)]
        )
        assert np.allclose(sweep.conductances, expected)
        assert sweep.best_index == int(np.argmin(expected)) + 1
        assert sweep.conductance == pytest.approx(expected.min())


def test_sweep_normalization_changes_order():
    hg = Hypergraph(2, (hyperedge_cut([0, 1]),))
    # identical x, but the weight on vertex 0 shrinks its normalized score
    sweep = cheeger_sweep(hg, np.array([100.0, 1.0]), np.array([1.0, 0.9]))
    assert np.array_equal(sweep.order, [1, 0])


def test_sweep_rejects_edgeless_input():
    with pytest.raises(ValueError):
        cheeger_sweep(Hypergraph(3, ()), None, np.zeros(3))


# ---------------------------------------------------------------------------
# synthetic generator


def test_generator_shapes_and_determinism():
    hg, ds, truth = generate_synthetic_hypergraph(
        n=50, within_per_cluster=7, across=4, edge_size=5, labeled_per_cluster=2, seed=9
    )
    assert hg.n == 50
    assert hg.r == 7 * 2 + 4
    assert all(e.size == 5 for e in hg.edges)
    for e in hg.edges[:7]:
        assert all(v < 25 for v in e.members)
    for e in hg.edges[7:14]:
        assert all(v >= 25 for v in e.members)
    assert np.array_equal(truth, np.repeat([0, 1], 25))
    assert ds.num_classes == 2
    assert np.array_equal(ds.class_counts(), [2, 2])
    for i, k in ds.labels.items():
        assert truth[i] == k
    hg2, ds2, _ = generate_synthetic_hypergraph(
        n=50, within_per_cluster=7, across=4, edge_size=5, labeled_per_cluster=2, seed=9
    )
    assert [e.members for e in hg2.edges] == [e.members for e in hg.edges]
    assert dict(ds2.labels) == dict(ds.labels)


def test_generator_forced_tiny_clusters():
    hg, _, _ = generate_synthetic_hypergraph(
        n=4, within_per_cluster=1, across=0, edge_size=2, labeled_per_cluster=0, seed=3
    )
    assert [e.members for e in hg.edges] == [(0, 1), (2, 3)]


def test_generator_validation():
    with pytest.raises(ValueError):
        generate_synthetic_hypergraph(5, 1, 1, 2, 1, 0)  # odd n
    with pytest.raises(ValueError):
        generate_synthetic_hypergraph(4, 1, 1, 3, 1, 0)  # edge too large
    with pytest.raises(ValueError):
        generate_synthetic_hypergraph(4, 1, 1, 2, 3, 0)  # too many labels


# ---------------------------------------------------------------------------
# tabular ingestion


def test_ingest_categorical_grouping():
    rows = [{"color": v} for v in ["a", "a", "b", "b"]]
    hg = ingest_tabular_dataset(rows, [("color", "categorical")])
    assert hg.n == 4
    assert sorted(e.members for e in hg.edges) == [(0, 1), (2, 3)]


def test_ingest_equal_width_bins_drop_singletons():
    rows = [{"v": str(i)} for i in range(10)]
    hg = ingest_tabular_dataset(rows, [("v", "numeric")])
    assert hg.n == 10
    assert hg.r == 0  # ten singleton bins, all dropped


def test_ingest_constant_columns():
    rows = [{"c": "x", "v": "3.5"} for _ in range(4)]
    hg = ingest_tabular_dataset(rows, [("c", "categorical"), ("v", "numeric")])
    # constant categorical keeps its full-column group; constant numeric drops
    assert [e.members for e in hg.edges] == [(0, 1, 2, 3)]


def test_ingest_singleton_category_dropped():
    rows = [{"c": v} for v in ["a", "a", "b"]]
    hg = ingest_tabular_dataset(rows, [("c", "categorical")])
    assert [e.members for e in hg.edges] == [(0, 1)]


def test_ingest_numeric_binning_groups():
    rows = [{"v": str(x)} for x in [0.0, 0.05, 0.5, 5.0, 5.2, 9.9, 10.0]]
    hg = ingest_tabular_dataset(rows, [("v", "numeric")], bins=10)
    # width 1.0: bins {0,.05,.5}, {5,5.2}, {9.9,10}
    assert sorted(e.members for e in hg.edges) == [(0, 1, 2), (3, 4), (5, 6)]


def test_ingest_equal_frequency_differs_from_width():
    vals = [0.0, 0.1, 0.2, 0.3, 100.0, 100.1, 100.2, 100.3]
    rows = [{"v": str(x)} for x in vals]
    width = ingest_tabular_dataset(rows, [("v", "numeric")], bins=2)
    freq = ingest_tabular_dataset(rows, [("v", "numeric")], bins=4, equal_frequency=True)
    assert sorted(e.members for e in width.edges) == [(0, 1, 2, 3), (4, 5, 6, 7)]
    assert sorted(e.members for e in freq.edges) == [(0, 1), (2, 3), (4, 5), (6, 7)]


def test_ingest_schema_forms_and_column_order():
    rows = [{"a": "x", "b": "1"}, {"a": "x", "b": "2"}, {"a": "y", "b": "1"}]
    hg1 = ingest_tabular_dataset(rows, {"columns": [{"name": "a", "kind": "categorical"}]})
    hg2 = ingest_tabular_dataset(rows, [("a", "categorical")])
    assert [e.members for e in hg1.edges] == [e.members for e in hg2.edges] == [(0, 1)]


def test_ingest_degree_roundtrip():
    rng = np.random.default_rng(4)
    rows = [
        {"c": str(rng.integers(0, 3)), "v": str(float(rng.integers(0, 5)))}
        for _ in range(30)
    ]
    schema = [("c", "categorical"), ("v", "numeric")]
    hg = ingest_tabular_dataset(rows, schema, bins=5)
    # independent recount: groups of size ≥ 2 containing each row
    expected = np.zeros(30)
    for name, kind in schema:
        groups: dict[object, list[int]] = {}
        for idx, row in enumerate(rows):
            if kind == "categorical":
                key = row[name]
            else:
                vals = np.array([float(r[name]) for r in rows])
                width = (vals.max() - vals.min()) / 5
                key = min(int((float(row[name]) - vals.min()) // width), 4)
            groups.setdefault(key, []).append(idx)
        for members in groups.values():
            if len(members) >= 2:
                expected[members] += 1
    assert np.array_equal(hg.degrees, expected)


def test_ingest_errors():
    rows = [{"a": "x"}, {"a": "y"}]
    with pytest.raises(ValueError, match="unknown kind"):
        ingest_tabular_dataset(rows, [("a", "ordinal")])
    with pytest.raises(ValueError, match="missing column"):
        ingest_tabular_dataset(rows, [("b", "categorical")])
    with pytest.raises(ValueError, match="not numeric"):
        ingest_tabular_dataset(rows, [("a", "numeric")])
    with pytest.raises(ValueError, match="rows"):
        ingest_tabular_dataset([], [("a", "categorical")])
    with pytest.raises(ValueError, match="bins"):
        ingest_tabular_dataset(rows, [("a", "categorical")], bins=0)
