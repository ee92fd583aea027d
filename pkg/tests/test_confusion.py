import itertools
import json
import math
import random
from collections import deque

import numpy as np
import pytest

from derivkit.confusion import (
    ConfusionGraph,
    ConfusionMatrix,
    clustering_json,
    confusion_matrix,
    edge_betweenness,
    f_from_r_squared,
    f_p_value,
    girvan_newman,
    graph_tsv,
    hapax_counts,
    heatmap_tsv,
    ols_regression,
    order_for_heatmap,
    threshold_graph,
    weak_components,
)
from derivkit.evaluation import PredictionRecord


def record(item_id, labels):
    n = len(labels)
    return PredictionRecord(item_id, tuple((l, float(n - i)) for i, l in enumerate(labels)))


# --- brute-force oracle: all-pairs shortest-path edge betweenness ------------


def brute_force_edge_betweenness(nodes, edges):
    adj = {n: sorted(d for s, d in edges if s == n) for n in nodes}
    bc = {e: 0.0 for e in edges}
    for s, t in itertools.permutations(nodes, 2):
        # BFS distances from s
        dist = {s: 0}
        q = deque([s])
        while q:
            v = q.popleft()
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    q.append(w)
        if t not in dist:
            continue
        # enumerate all shortest s->t paths by DFS over the BFS DAG
        paths = []

        def walk(v, path):
            if v == t:
                paths.append(list(path))
                return
            for w in adj[v]:
                if w in dist and dist[w] == dist[v] + 1 and dist[w] <= dist[t]:
                    path.append((v, w))
                    walk(w, path)
                    path.pop()

        walk(s, [])
        if not paths:
            continue
        for path in paths:
            for e in path:
                bc[e] += 1.0 / len(paths)
    return bc


class TestConfusionMatrix:
    def test_perfect_predictor_is_identity(self):
        labels = ["u", "v", "w"]
        golds = {f"i{j}": labels[j % 3] for j in range(9)}
        records = [
            record(i, [g] + [l for l in labels if l != g]) for i, g in golds.items()
        ]
        cm = confusion_matrix(records, golds, labels)
        assert np.allclose(cm.matrix, np.eye(3))

    def test_systematic_confusion(self):
        golds = {"a": "u", "b": "u"}
        records = [record("a", ["v", "u"]), record("b", ["v", "u"])]
        cm = confusion_matrix(records, golds, ["u", "v"])
        assert np.allclose(cm.matrix[0], [0.0, 1.0])

    def test_planted_counts(self):
        # gold u: 2x pred u, 1x pred v, 1x pred w -> row [.5, .25, .25]
        golds = {f"i{j}": "u" for j in range(4)}
        preds = ["u", "u", "v", "w"]
        records = [record(f"i{j}", [p] + sorted({"u", "v", "w"} - {p})) for j, p in enumerate(preds)]
        cm = confusion_matrix(records, golds, ["u", "v", "w"])
        assert np.allclose(cm.matrix[0], [0.5, 0.25, 0.25])

    def test_zero_support_row_stays_zero(self):
        golds = {"a": "u"}
        cm = confusion_matrix([record("a", ["u", "v"])], golds, ["u", "v"])
        assert np.allclose(cm.matrix[1], [0.0, 0.0])


class TestThresholdGraph:
    def cm(self, value):
        return ConfusionMatrix(labels=("u", "v"), matrix=np.array([[1 - value, value], [0.0, 1.0]]))

    def test_boundary_exact(self):
        assert threshold_graph(self.cm(0.08)).edges == frozenset()

    def test_just_above(self):
        assert threshold_graph(self.cm(0.081)).edges == {("u", "v")}

    def test_clearly_above(self):
        assert threshold_graph(self.cm(0.30)).edges == {("u", "v")}

    def test_diagonal_never_edges(self):
        cm = ConfusionMatrix(labels=("u", "v"), matrix=np.array([[0.9, 0.1], [0.2, 0.8]]))
        graph = threshold_graph(cm, 0.05)
        assert ("u", "u") not in graph.edges and ("v", "v") not in graph.edges

    def test_monotone_in_theta(self):
        rng = np.random.default_rng(0)
        m = rng.random((6, 6))
        m = m / m.sum(axis=1, keepdims=True)
        cm = ConfusionMatrix(labels=tuple("abcdef"), matrix=m)
        for t1, t2 in [(0.05, 0.1), (0.1, 0.2), (0.0, 0.3)]:
            assert threshold_graph(cm, t2).edges <= threshold_graph(cm, t1).edges


def random_digraph(rng, max_nodes=8):
    n = rng.randint(2, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    edges = set()
    for s, t in itertools.permutations(nodes, 2):
        if rng.random() < 0.3:
            edges.add((s, t))
    return nodes, edges


class TestEdgeBetweenness:
    def test_matches_brute_force_on_random_digraphs(self):
        for seed in range(200):
            rng = random.Random(seed)
            nodes, edges = random_digraph(rng)
            got = edge_betweenness(nodes, edges)
            want = brute_force_edge_betweenness(nodes, edges)
            for e in edges:
                assert math.isclose(got[e], want[e], abs_tol=1e-9), (seed, e)

    def test_bridge_maximal(self):
        # two 3-cycles (symmetric, so cross traffic has no detour) joined
        # by one bridge: the bridge carries all 9 cross pairs
        bc = edge_betweenness(*two_cycles_and_bridge())
        top = max(bc.values())
        assert bc[("c", "x")] == top
        assert sum(1 for v in bc.values() if v == top) == 1


def two_cycles_and_bridge():
    cycle1 = {("a", "b"), ("b", "c"), ("c", "a")}
    cycle2 = {("x", "y"), ("y", "z"), ("z", "x")}
    edges = set()
    for s, t in cycle1 | cycle2:
        edges.add((s, t))
        edges.add((t, s))
    edges.add(("c", "x"))
    return ["a", "b", "c", "x", "y", "z"], edges


class TestGirvanNewman:
    def two_cycles_graph(self):
        nodes, edges = two_cycles_and_bridge()
        return ConfusionGraph(nodes=tuple(nodes), edges=frozenset(edges), theta=0.08)

    def test_bridge_removed_first(self):
        clustering = girvan_newman(self.two_cycles_graph(), 1)
        assert set(clustering.final) == {
            frozenset({"a", "b", "c"}),
            frozenset({"x", "y", "z"}),
        }

    def test_exhaustive_splits_reach_singletons(self):
        clustering = girvan_newman(self.two_cycles_graph(), 100)
        assert all(len(c) == 1 for c in clustering.final)

    def test_partitions_form_refinement_chain(self):
        for seed in range(30):
            rng = random.Random(seed)
            nodes, edges = random_digraph(rng)
            graph = ConfusionGraph(nodes=tuple(nodes), edges=frozenset(edges), theta=0.08)
            clustering = girvan_newman(graph, 100)
            for prev, nxt in zip(clustering.partitions, clustering.partitions[1:]):
                for block in nxt:
                    assert any(block <= parent for parent in prev)

    def test_edgeless_graph(self):
        graph = ConfusionGraph(nodes=("a", "b"), edges=frozenset(), theta=0.08)
        clustering = girvan_newman(graph, 3)
        assert clustering.final == (frozenset({"a"}), frozenset({"b"}))

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            girvan_newman(self.two_cycles_graph(), 0)

    def test_determinism(self):
        a = girvan_newman(self.two_cycles_graph(), 3)
        b = girvan_newman(self.two_cycles_graph(), 3)
        assert a == b


class TestHeatmapOrder:
    def test_block_structure_contiguous(self):
        labels = tuple("abcdef")
        m = np.zeros((6, 6))
        blocks = [("a", "c", "e"), ("b", "d", "f")]
        idx = {l: i for i, l in enumerate(labels)}
        for block in blocks:
            for u, v in itertools.permutations(block, 2):
                m[idx[u], idx[v]] = 0.5
        cm = ConfusionMatrix(labels=labels, matrix=m)
        graph = threshold_graph(cm, 0.08)
        clustering = girvan_newman(graph, 1)
        order, reordered = order_for_heatmap(clustering, cm)
        # each block occupies a contiguous span of the ordering
        for block in blocks:
            positions = sorted(order.index(l) for l in block)
            assert positions == list(range(positions[0], positions[0] + len(block)))
        assert reordered.shape == (6, 6)

    def test_singletons_last(self):
        labels = ("a", "b", "c")
        m = np.array([[0.0, 0.9, 0.0], [0.9, 0.0, 0.0], [0.0, 0.0, 0.0]])
        cm = ConfusionMatrix(labels=labels, matrix=m)
        clustering = girvan_newman(threshold_graph(cm, 0.08), 1)
        order, _ = order_for_heatmap(clustering, cm)
        assert order[-1] == "c"

    def test_exports(self):
        cm = ConfusionMatrix(labels=("u", "v"), matrix=np.array([[1.0, 0.0], [0.0, 1.0]]))
        graph = threshold_graph(cm, 0.08)
        assert graph_tsv(graph) == ""
        clustering = girvan_newman(graph, 1)
        assert json.loads(clustering_json(clustering)) == [[["u"], ["v"]]]
        text = heatmap_tsv(["u", "v"], cm.matrix)
        assert text.startswith("\tu\tv\n")


class TestHapaxCounts:
    def test_counts(self):
        freqs = {"antiwarx": 1, "antifoo": 1, "antibar": 1, "unfoo": 1, "unbar": 5}
        bundles = {s: ("anti" if s.startswith("anti") else "un") for s in freqs}
        counts = hapax_counts(freqs, bundles)
        assert counts == {"anti": 3, "un": 1}

    def test_affix_without_hapaxes(self):
        counts = hapax_counts({"unbar": 5}, {"unbar": "un"})
        assert counts.get("un", 0) == 0


class TestRegression:
    def test_paper_f_identities(self):
        assert abs(f_from_r_squared(0.566, 45) - 56.05) < 0.1
        assert abs(f_from_r_squared(0.410, 43) - 28.49) < 0.01
        assert f_p_value(f_from_r_squared(0.566, 45), 43) < 0.001
        assert f_p_value(f_from_r_squared(0.410, 43), 41) < 0.001

    def test_f_identity_holds_for_computed_results(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=20)
            y = 0.3 * x + rng.normal(size=20)
            res = ols_regression(x, y)
            lhs = res.f_statistic * (1 - res.r_squared)
            rhs = res.r_squared * (res.n - 2)
            assert abs(lhs - rhs) < 1e-9

    def test_exact_collinearity(self):
        x = [1.0, 2.0, 3.0, 4.0]
        y = [2.0, 4.0, 6.0, 8.0]
        res = ols_regression(x, y)
        assert res.r_squared == 1.0
        assert res.f_statistic == math.inf
        assert res.p_value == 0.0

    def test_constant_x_rejected(self):
        with pytest.raises(ValueError):
            ols_regression([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            ols_regression([1.0, 2.0], [1.0, 2.0])

    def test_p_decreases_in_f(self):
        ps = [f_p_value(f, 40) for f in (0.5, 1.0, 2.0, 5.0, 20.0, 100.0)]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_p_matches_scipy(self):
        from scipy import stats

        for f, df2 in [(3.2, 10), (56.05, 43), (0.7, 5)]:
            assert abs(f_p_value(f, df2) - stats.f.sf(f, 1, df2)) < 1e-12

    def test_null_p_roughly_uniform(self):
        rng = np.random.default_rng(42)
        ps = []
        for _ in range(400):
            x = rng.normal(size=15)
            y = rng.normal(size=15)
            ps.append(ols_regression(x, y).p_value)
        ps = np.sort(ps)
        # Kolmogorov-Smirnov distance against U(0,1)
        grid = (np.arange(1, len(ps) + 1)) / len(ps)
        dks = np.max(np.abs(ps - grid))
        assert dks < 0.08

    def test_slope_intercept(self):
        res = ols_regression([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
        assert abs(res.slope - 2.0) < 1e-12
        assert abs(res.intercept - 1.0) < 1e-12
        assert json.loads(res.to_json())["n"] == 4
