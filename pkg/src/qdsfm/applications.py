"""Problem builders on top of the core solver.

This module reduces concrete learning tasks to `ProblemInstance`s:

* transductive label propagation on hypergraphs (per-class score vectors
  with degree or identity normalization),
* PageRank on graphs (restart parameter α, seed distribution s),
* sweep-cut rounding of a score vector into a low-conductance partition,
* a two-cluster synthetic hypergraph generator,
* ingestion of tabular records into a hypergraph (one hyperedge per
  categorical value and per numeric bin).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .solvers import ProblemInstance, SolveConfig, solve
from .submodular import SubmodularAtom, WeightMatrix, hyperedge_cut

__all__ = [
    "Hypergraph",
    "LabeledDataset",
    "SweepCut",
    "build_ssl_instance",
    "ssl_score_matrix",
    "argmax_classify",
    "build_pagerank_instance",
    "pagerank_residual",
    "cheeger_sweep",
    "generate_synthetic_hypergraph",
    "ingest_tabular_dataset",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """A vertex count plus cut components (edges, hyperedges, directed
    hyperedges) reused directly as solver atoms."""

    n: int
    edges: tuple[SubmodularAtom, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("hypergraph needs at least one vertex")
        edges = tuple(self.edges)
        for idx, edge in enumerate(edges):
            if not isinstance(edge, SubmodularAtom) or not edge.is_cut:
                raise ValueError(f"hyperedge {idx} must be a cut component")
            if edge.members[0] < 0 or edge.members[-1] >= self.n:
                raise ValueError(
                    f"hyperedge {idx} references vertex {edge.members[-1]} "
                    f"outside 0..{self.n - 1}"
                )
        object.__setattr__(self, "edges", edges)

    @property
    def r(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        """d_i = number of incident hyperedges (weights ignored)."""
        d = np.zeros(self.n)
        for edge in self.edges:
            d[edge.members_arr] += 1.0
        d.flags.writeable = False
        return d

    @cached_property
    def weighted_degrees(self) -> np.ndarray:
        d = np.zeros(self.n)
        for edge in self.edges:
            d[edge.members_arr] += edge.weight
        d.flags.writeable = False
        return d


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Partial labels over n samples: a map i → class in [0, num_classes)."""

    n: int
    labels: Mapping[int, int]
    num_classes: int | None = None

    def __post_init__(self) -> None:
        labels = {int(i): int(k) for i, k in dict(self.labels).items()}
        classes = max(labels.values(), default=0) + 1
        k_total = self.num_classes if self.num_classes is not None else max(classes, 2)
        if k_total < 2:
            raise ValueError("need at least two classes")
        for i, k in labels.items():
            if not 0 <= i < self.n:
                raise ValueError(f"labeled index {i} outside 0..{self.n - 1}")
            if not 0 <= k < k_total:
                raise ValueError(f"label {k} for index {i} outside 0..{k_total - 1}")
        object.__setattr__(self, "labels", MappingProxyType(labels))
        object.__setattr__(self, "num_classes", k_total)

    def class_counts(self) -> np.ndarray:
        counts = np.zeros(self.num_classes, dtype=int)
        for k in self.labels.values():
            counts[k] += 1
        return counts

    def anchor(self, k: int) -> np.ndarray:
        """The ±1/0 vector for class k: +1 on class-k labels, −1 on labels
        of any other class, 0 on unlabeled samples."""
        if not 0 <= k < self.num_classes:
            raise ValueError(f"class {k} outside 0..{self.num_classes - 1}")
        a = np.zeros(self.n)
        for i, label in self.labels.items():
            a[i] = 1.0 if label == k else -1.0
        return a


def _as_weights(w, n: int) -> np.ndarray:
    if w is None:
        return np.ones(n)
    if isinstance(w, WeightMatrix):
        return w.diag
    arr = np.asarray(w, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"weights have shape {arr.shape}, expected ({n},)")
    return arr


# ---------------------------------------------------------------------------
# label propagation


def build_ssl_instance(
    hg: Hypergraph,
    ds: LabeledDataset | Mapping[int, int],
    k: int,
    beta: float,
    normalization: str = "degree",
) -> tuple[ProblemInstance, Callable[[np.ndarray], np.ndarray]]:
    """Build the class-k score problem

        min_x  β‖x − a‖² + Σ_r w_r (max_{i,j ∈ S_r} x_i/√W_ii − x_j/√W_jj)²

    in normalized coordinates: substituting x' = W^{−1/2}x yields the
    standard form min ‖x' − a'‖²_{βW} + Σ_r f_r(x')² with a' = W^{−1/2}a,
    so the instance's solution IS the vector of classification scores
    x'_i = x_i/√W_ii.  Returns (instance, back) where back maps the solved
    scores to the original coordinates x = W^{1/2}x'.

    ``normalization`` is "degree" (W = incidence counts; every vertex must
    be covered) or "identity".
    """
    if not isinstance(ds, LabeledDataset):
        ds = LabeledDataset(hg.n, ds)
    if ds.n != hg.n:
        raise ValueError(f"dataset has {ds.n} samples for {hg.n} vertices")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if normalization == "degree":
        wdiag = hg.degrees
        if np.any(wdiag == 0.0):
            vertex = int(np.flatnonzero(wdiag == 0.0)[0])
            raise ValueError(
                f"vertex {vertex} has no incident hyperedge; "
                "degree normalization needs full coverage"
            )
    elif normalization == "identity":
        wdiag = np.ones(hg.n)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")

    sqrt_w = np.sqrt(wdiag)
    a_prime = ds.anchor(k) / sqrt_w
    instance = ProblemInstance(a=a_prime, w=beta * wdiag, atoms=hg.edges)

    def back(x_prime: np.ndarray) -> np.ndarray:
        return sqrt_w * np.asarray(x_prime, dtype=float)

    return instance, back


def ssl_score_matrix(
    hg: Hypergraph,
    ds: LabeledDataset,
    beta: float,
    normalization: str = "degree",
    config: SolveConfig = SolveConfig(),
) -> np.ndarray:
    """Solve one score problem per class; row k holds the class-k scores."""
    scores = np.zeros((ds.num_classes, hg.n))
    for k in range(ds.num_classes):
        instance, _ = build_ssl_instance(hg, ds, k, beta, normalization)
        scores[k] = solve(instance, config).x
    return scores


def argmax_classify(scores: np.ndarray) -> np.ndarray:
    """Assign each sample the class whose score row is largest."""
    return np.argmax(scores, axis=0)


# ---------------------------------------------------------------------------
# PageRank


def _require_graph(hg: Hypergraph) -> None:
    for idx, edge in enumerate(hg.edges):
        if edge.size != 2 or edge.kind == "directed_hyperedge":
            raise ValueError(f"hyperedge {idx} is not an undirected 2-vertex edge")


def adjacency_multiply(hg: Hypergraph, v: np.ndarray) -> np.ndarray:
    """(A·v) for the weighted adjacency of a graph-shaped hypergraph."""
    _require_graph(hg)
    out = np.zeros(hg.n)
    for edge in hg.edges:
        i, j = edge.members
        out[i] += edge.weight * v[j]
        out[j] += edge.weight * v[i]
    return out


def build_pagerank_instance(
    hg: Hypergraph,
    alpha: float,
    s,
) -> tuple[ProblemInstance, Callable[[np.ndarray], np.ndarray]]:
    """Reduce PageRank with restart probability 1−α to the quadratic form

        min_p  (1−α)/α · ‖p − s‖²_{D⁻¹} + (D⁻¹p)ᵀ(D − A)(D⁻¹p),

    i.e. the instance with x = D⁻¹p, a = D⁻¹s, W = ((1−α)/α)·D, and one
    edge component per graph edge.  Returns (instance, back) with
    back(x) = D·x = p.  The solved p satisfies p = (1−α)s + αAD⁻¹p.
    """
    _require_graph(hg)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    d = hg.weighted_degrees
    if np.any(d == 0.0):
        vertex = int(np.flatnonzero(d == 0.0)[0])
        raise ValueError(f"vertex {vertex} has degree zero")
    s = np.asarray(s, dtype=float)
    if s.shape != (hg.n,):
        raise ValueError(f"seed vector has shape {s.shape}, expected ({hg.n},)")
    instance = ProblemInstance(a=s / d, w=((1.0 - alpha) / alpha) * d, atoms=hg.edges)

    def back(x: np.ndarray) -> np.ndarray:
        return d * np.asarray(x, dtype=float)

    return instance, back


def pagerank_residual(hg: Hypergraph, alpha: float, s, p) -> float:
    """‖(1−α)s + α·A·D⁻¹p − p‖_∞, the fixed-point defect of p."""
    s = np.asarray(s, dtype=float)
    p = np.asarray(p, dtype=float)
    walk = adjacency_multiply(hg, p / hg.weighted_degrees)
    return float(np.max(np.abs((1.0 - alpha) * s + alpha * walk - p)))


# ---------------------------------------------------------------------------
# sweep-cut rounding


@dataclass(frozen=True, eq=False)
class SweepCut:
    """Result of scanning score-ordered prefixes for the lowest-conductance
    split.  ``best_index`` is the prefix length j* ∈ [1, N−1];
    ``conductances[j−1]`` is c(S_j)."""

    order: np.ndarray
    conductances: np.ndarray
    best_index: int
    conductance: float

    @property
    def prefix(self) -> np.ndarray:
        return self.order[: self.best_index]

    def labels(self, prefix_class: int = 1) -> np.ndarray:
        """0/1 vertex labels; the high-score prefix side gets prefix_class."""
        out = np.full(self.order.size, 1 - prefix_class, dtype=int)
        out[self.prefix] = prefix_class
        return out


def cheeger_sweep(hg: Hypergraph, w, x) -> SweepCut:
    """Sweep the prefixes of the normalized-score order.

    Vertices are sorted by x_i/√W_ii descending (ties broken by index); for
    every prefix S_j, 1 ≤ j ≤ N−1, the conductance

        c(S_j) = #{r: S_r crosses the cut} / min(Σ_r |S_r ∩ S_j|, Σ_r |S_r ∩ S̄_j|)

    is computed incrementally, and the first minimizer is returned.  A side
    with no incidence mass cannot anchor a meaningful cut and scores ∞.
    """
    if hg.r == 0:
        raise ValueError("cannot sweep a hypergraph with no hyperedges")
    if hg.n < 2:
        raise ValueError("need at least two vertices to form a cut")
    wdiag = _as_weights(w, hg.n)
    scores = np.asarray(x, dtype=float) / np.sqrt(wdiag)
    order = np.argsort(-scores, kind="stable")

    incident: list[list[int]] = [[] for _ in range(hg.n)]
    sizes = np.empty(hg.r, dtype=int)
    for e_idx, edge in enumerate(hg.edges):
        sizes[e_idx] = edge.size
        for v in edge.members:
            incident[v].append(e_idx)

    degrees = hg.degrees
    vol_total = float(degrees.sum())
    counts = np.zeros(hg.r, dtype=int)
    crossing = 0
    vol_in = 0.0
    conductances = np.empty(hg.n - 1)
    for j, v in enumerate(order[:-1]):
        for e_idx in incident[v]:
            counts[e_idx] += 1
            if sizes[e_idx] > 1:
                if counts[e_idx] == 1:
                    crossing += 1
                if counts[e_idx] == sizes[e_idx]:
                    crossing -= 1
        vol_in += degrees[v]
        denom = min(vol_in, vol_total - vol_in)
        conductances[j] = crossing / denom if denom > 0 else np.inf
    best = int(np.argmin(conductances))
    return SweepCut(
        order=order,
        conductances=conductances,
        best_index=best + 1,
        conductance=float(conductances[best]),
    )


# ---------------------------------------------------------------------------
# synthetic two-cluster hypergraphs


def generate_synthetic_hypergraph(
    n: int,
    within_per_cluster: int,
    across: int,
    edge_size: int,
    labeled_per_cluster: int,
    seed: int,
) -> tuple[Hypergraph, LabeledDataset, np.ndarray]:
    """Two equal clusters; hyperedges sampled uniformly without replacement.

    Within-cluster hyperedges draw their vertices from one cluster,
    across-cluster ones from all vertices (they may, by chance, land inside
    a single cluster and are kept regardless).  ``labeled_per_cluster``
    vertices per cluster are revealed.  Returns the hypergraph, the partial
    labels, and the ground-truth assignment (first half 0, second half 1).
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("n must be even and at least 2")
    half = n // 2
    if not 1 <= edge_size <= half:
        raise ValueError(f"edge_size must lie in 1..{half}")
    if not 0 <= labeled_per_cluster <= half:
        raise ValueError(f"labeled_per_cluster must lie in 0..{half}")
    rng = np.random.default_rng(seed)
    edges = []
    for start in (0, half):
        for _ in range(within_per_cluster):
            members = rng.choice(half, size=edge_size, replace=False) + start
            edges.append(hyperedge_cut(sorted(int(v) for v in members)))
    for _ in range(across):
        members = rng.choice(n, size=edge_size, replace=False)
        edges.append(hyperedge_cut(sorted(int(v) for v in members)))
    truth = np.zeros(n, dtype=int)
    truth[half:] = 1
    labels: dict[int, int] = {}
    for start, klass in ((0, 0), (half, 1)):
        picks = rng.choice(half, size=labeled_per_cluster, replace=False) + start
        for v in picks:
            labels[int(v)] = klass
    hg = Hypergraph(n, tuple(edges))
    return hg, LabeledDataset(n, labels, num_classes=2), truth


# ---------------------------------------------------------------------------
# tabular ingestion


def _schema_columns(schema) -> list[tuple[str, str]]:
    if isinstance(schema, Mapping) and "columns" in schema:
        schema = schema["columns"]
    columns = []
    for entry in schema:
        if isinstance(entry, Mapping):
            columns.append((str(entry["name"]), str(entry["kind"])))
        else:
            name, kind = entry
            columns.append((str(name), str(kind)))
    return columns


def ingest_tabular_dataset(
    rows: Sequence[Mapping[str, str]],
    schema,
    bins: int = 10,
    equal_frequency: bool = False,
) -> Hypergraph:
    """Turn records into a hypergraph whose vertices are the row indices.

    Every (categorical column, value) group and every (numeric column, bin)
    group of size ≥ 2 becomes one unit-weight hyperedge; singleton groups
    are dropped.  Numeric columns are split into ``bins`` equal-width bins
    over the observed [min, max] (equal-frequency quantile bins with the
    flag); a constant numeric column has a single degenerate bin and
    contributes nothing.

    ``schema`` is a sequence of (name, kind) pairs — or dicts with "name"
    and "kind", or a {"columns": [...]} mapping — with kind "categorical"
    or "numeric".  Columns not named in the schema are ignored.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to ingest")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    edges = []
    for name, kind in _schema_columns(schema):
        if kind == "categorical":
            groups: dict[str, list[int]] = {}
            for idx, row in enumerate(rows):
                value = _cell(row, name, idx)
                groups.setdefault(value, []).append(idx)
            keyed = sorted(groups.items())
        elif kind == "numeric":
            values = np.empty(len(rows))
            for idx, row in enumerate(rows):
                cell = _cell(row, name, idx)
                try:
                    values[idx] = float(cell)
                except ValueError:
                    raise ValueError(
                        f"column {name!r}, row {idx}: {cell!r} is not numeric"
                    ) from None
            lo, hi = float(values.min()), float(values.max())
            if lo == hi:
                logger.info("column %r is constant; dropped its single bin", name)
                continue
            if equal_frequency:
                cuts = np.quantile(values, np.linspace(0.0, 1.0, bins + 1))[1:-1]
                assignment = np.searchsorted(cuts, values, side="right")
            else:
                width = (hi - lo) / bins
                assignment = np.minimum((values - lo) // width, bins - 1).astype(int)
            groups = {}
            for idx, b in enumerate(assignment):
                groups.setdefault(int(b), []).append(idx)
            keyed = sorted(groups.items())
        else:
            raise ValueError(f"column {name!r}: unknown kind {kind!r}")
        dropped = 0
        for _, members in keyed:
            if len(members) < 2:
                dropped += 1
                continue
            edges.append(hyperedge_cut(members))
        if dropped:
            logger.info("column %r: dropped %d singleton group(s)", name, dropped)
    return Hypergraph(len(rows), tuple(edges))


def _cell(row: Mapping[str, str], name: str, idx: int) -> str:
    try:
        value = row[name]
    except KeyError:
        raise ValueError(f"row {idx} is missing column {name!r}") from None
    if value is None:
        raise ValueError(f"row {idx} is missing column {name!r}")
    return value
