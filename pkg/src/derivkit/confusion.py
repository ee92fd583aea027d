"""Confusion structure of affix predictions and productivity regression.

Builds a row-normalized confusion matrix from rank-1 predictions,
thresholds it into a directed confusion graph, clusters the graph with
the Girvan-Newman algorithm (divisive removal of maximal edge-betweenness
edges), and regresses per-affix MRR on hapax counts.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import betainc

from .evaluation import PredictionRecord

DEFAULT_THETA = 0.08

Edge = tuple[str, str]


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    matrix: np.ndarray  # row-normalized; zero-support rows stay all-zero

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class ConfusionGraph:
    nodes: tuple[str, ...]
    edges: frozenset[Edge]
    theta: float

    def successors(self, node: str) -> list[str]:
        return sorted(dst for src, dst in self.edges if src == node)


@dataclass(frozen=True)
class Clustering:
    partitions: tuple[tuple[frozenset[str], ...], ...]  # after each split event
    requested_splits: int

    @property
    def final(self) -> tuple[frozenset[str], ...]:
        return self.partitions[-1] if self.partitions else ()


def confusion_matrix(
    records: Iterable[PredictionRecord],
    golds: Mapping[str, str],
    labels: Sequence[str],
) -> ConfusionMatrix:
    """Counts of (gold, rank-1 prediction), row-normalized."""
    labels = tuple(labels)
    idx = {l: i for i, l in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)))
    by_id = {r.item_id: r for r in records}
    for item_id, gold in golds.items():
        record = by_id.get(item_id)
        if record is None:
            raise ValueError(f"missing prediction record for item {item_id}")
        if not record.ranking:
            continue
        pred = record.ranking[0][0]
        if gold in idx and pred in idx:
            counts[idx[gold], idx[pred]] += 1
    sums = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        matrix = np.where(sums > 0, counts / np.maximum(sums, 1), 0.0)
    return ConfusionMatrix(labels=labels, matrix=matrix)


def threshold_graph(cm: ConfusionMatrix, theta: float = DEFAULT_THETA) -> ConfusionGraph:
    """Directed edge i -> j iff the off-diagonal confusion rate exceeds theta."""
    edges = set()
    n = len(cm.labels)
    for i in range(n):
        for j in range(n):
            if i != j and cm.matrix[i, j] > theta:
                edges.add((cm.labels[i], cm.labels[j]))
    return ConfusionGraph(nodes=cm.labels, edges=frozenset(edges), theta=theta)


def edge_betweenness(nodes: Sequence[str], edges: Iterable[Edge]) -> dict[Edge, float]:
    """Brandes edge betweenness on a directed graph with unit edge weights."""
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for src, dst in edges:
        adj[src].append(dst)
    betweenness: dict[Edge, float] = {e: 0.0 for e in edges}

    for s in nodes:
        # single-source shortest paths (BFS)
        dist = {s: 0}
        sigma = {n: 0.0 for n in nodes}
        sigma[s] = 1.0
        preds: dict[str, list[str]] = {n: [] for n in nodes}
        order = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        # dependency accumulation
        delta = {n: 0.0 for n in nodes}
        for w in reversed(order):
            for v in preds[w]:
                contrib = sigma[v] / sigma[w] * (1.0 + delta[w])
                betweenness[(v, w)] += contrib
                delta[v] += contrib
    return betweenness


def weak_components(nodes: Sequence[str], edges: Iterable[Edge]) -> tuple[frozenset[str], ...]:
    undirected: dict[str, set[str]] = {n: set() for n in nodes}
    for src, dst in edges:
        undirected[src].add(dst)
        undirected[dst].add(src)
    seen: set[str] = set()
    components = []
    for n in nodes:
        if n in seen:
            continue
        comp = {n}
        stack = [n]
        while stack:
            v = stack.pop()
            for w in undirected[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        components.append(frozenset(comp))
    return tuple(sorted(components, key=lambda c: sorted(c)[0]))


def girvan_newman(graph: ConfusionGraph, k_splits: int) -> Clustering:
    """Remove maximal-betweenness edges until k split events are recorded.

    A split is an increase in the number of weakly connected components.
    Betweenness ties break toward the lexicographically smallest edge.
    """
    if k_splits < 1:
        raise ValueError("k_splits must be >= 1")
    nodes = graph.nodes
    edges = set(graph.edges)
    if not edges:
        return Clustering(partitions=(weak_components(nodes, edges),), requested_splits=k_splits)

    partitions = []
    n_components = len(weak_components(nodes, edges))
    while edges and len(partitions) < k_splits:
        bc = edge_betweenness(nodes, edges)
        top = max(bc.values())
        edge = min(e for e, v in bc.items() if v == top)
        edges.remove(edge)
        components = weak_components(nodes, edges)
        if len(components) > n_components:
            n_components = len(components)
            partitions.append(components)
    if not partitions:
        partitions.append(weak_components(nodes, edges))
    return Clustering(partitions=tuple(partitions), requested_splits=k_splits)


def order_for_heatmap(
    clustering: Clustering,
    cm: ConfusionMatrix,
) -> tuple[list[str], np.ndarray]:
    """Label order grouping final clusters (size desc, singletons last)."""
    clusters = [sorted(c) for c in clustering.final]
    multi = [c for c in clusters if len(c) > 1]
    single = [c for c in clusters if len(c) == 1]
    multi.sort(key=lambda c: (-len(c), c[0]))
    single.sort(key=lambda c: c[0])
    order = [label for c in multi + single for label in c if label in cm.labels]
    # clustering may cover only graph nodes; keep any remaining labels at the end
    order += [l for l in cm.labels if l not in order]
    idx = [cm.labels.index(l) for l in order]
    return order, cm.matrix[np.ix_(idx, idx)]


def hapax_counts(
    frequencies: Mapping[str, int],
    bundles: Mapping[str, str],
) -> dict[str, int]:
    """Distinct corpus-frequency-1 derivative types per affix bundle label.

    `frequencies` maps derivative surface to corpus frequency, `bundles`
    maps surface to its affix bundle label.
    """
    counts: dict[str, int] = {}
    for surface, freq in frequencies.items():
        if freq == 1 and surface in bundles:
            label = bundles[surface]
            counts[label] = counts.get(label, 0) + 1
    return counts


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    f_statistic: float
    p_value: float
    df: tuple[int, int]
    n: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "slope": self.slope,
                "intercept": self.intercept,
                "r_squared": self.r_squared,
                "f_statistic": self.f_statistic,
                "p_value": self.p_value,
                "df": list(self.df),
                "n": self.n,
            }
        )


def f_from_r_squared(r_squared: float, n: int) -> float:
    """F statistic of a simple regression from its R^2 at df (1, n-2)."""
    if not 0.0 <= r_squared <= 1.0:
        raise ValueError("R^2 must lie in [0, 1]")
    if r_squared == 1.0:
        return math.inf
    return r_squared * (n - 2) / (1.0 - r_squared)


def f_p_value(f_stat: float, df2: int) -> float:
    """Survival function of F(1, df2) via the regularized incomplete beta."""
    if f_stat is math.inf:
        return 0.0
    if f_stat <= 0:
        return 1.0
    return float(betainc(df2 / 2.0, 0.5, df2 / (df2 + f_stat)))


def ols_regression(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Simple ordinary least squares of y on x with F test of the slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n != len(y):
        raise ValueError("x and y must have equal length")
    if n < 3:
        raise ValueError("regression needs at least 3 points")
    if np.ptp(x) == 0:
        raise ValueError("constant x: slope inference undefined")

    x_c = x - x.mean()
    y_c = y - y.mean()
    slope = float((x_c @ y_c) / (x_c @ x_c))
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(y_c @ y_c)
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    r_squared = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    # guard against r_squared marginally exceeding 1 from roundoff
    r_squared = min(r_squared, 1.0)
    f_stat = f_from_r_squared(r_squared, n)
    p = f_p_value(f_stat, n - 2)
    return RegressionResult(
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        f_statistic=f_stat,
        p_value=p,
        df=(1, n - 2),
        n=n,
    )


# --- Exports ----------------------------------------------------------------


def graph_tsv(graph: ConfusionGraph) -> str:
    lines = [f"{src}\t{dst}" for src, dst in sorted(graph.edges)]
    return "\n".join(lines) + ("\n" if lines else "")


def clustering_json(clustering: Clustering) -> str:
    return json.dumps([[sorted(c) for c in p] for p in clustering.partitions])


def heatmap_tsv(order: Sequence[str], matrix: np.ndarray) -> str:
    lines = ["\t" + "\t".join(order)]
    for label, row in zip(order, matrix):
        lines.append(label + "\t" + "\t".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"
