"""Submodular set-function components and their polyhedral machinery.

Each component is a nonnegative, normalized submodular function F_r attached
to an incidence set S_r of ground-set indices.  The module evaluates F_r,
computes its Lovász extension f_r (the support function of the base
polytope B_r), runs Edmonds' greedy algorithm as the linear-minimization
oracle over B_r, and derives the condition-number style diagnostics used by
the dual solvers.

Cut-type components (graph edges, hyperedges, directed hyperedges) get
closed forms throughout; general components are handled through an explicit
value table or a user callback.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "SubmodularAtom",
    "WeightMatrix",
    "DiagnosticBounds",
    "BoundUnavailableError",
    "graph_edge_cut",
    "hyperedge_cut",
    "directed_hyperedge_cut",
    "general_oracle",
    "evaluate",
    "lovasz_extension",
    "greedy_linear_minimizer",
    "base_polytope_contains",
    "diagnostics",
    "max_base_norm_sq",
    "atom_max_value",
]

_CUT_KINDS = ("edge", "hyperedge", "directed_hyperedge")
_ALL_KINDS = _CUT_KINDS + ("table", "oracle")

# Exhaustive subset enumeration is capped here (2^20 evaluations).
EXHAUSTIVE_LIMIT = 20


class BoundUnavailableError(ValueError):
    """Raised when a diagnostic bound would require an exponential scan."""


def _check_indices(name: str, idx: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(int(i) for i in idx))
    if len(out) == 0:
        raise ValueError(f"{name} must be nonempty")
    if any(i < 0 for i in out):
        raise ValueError(f"{name} contains negative indices")
    if len(set(out)) != len(out):
        raise ValueError(f"{name} contains duplicate indices")
    return out


@dataclass(frozen=True, eq=False)
class SubmodularAtom:
    """One component F_r with incidence set ``members`` and scale ``weight``.

    Kinds:
      * ``"edge"``: F(S) = sqrt(weight) if S splits the two endpoints.
      * ``"hyperedge"``: F(S) = sqrt(weight) if S splits ``members`` properly.
      * ``"directed_hyperedge"``: F(S) = sqrt(weight) if S meets ``head`` and
        misses part of ``tail``.
      * ``"table"``: F(S) = weight * table[bitmask(S)] with bit k standing for
        ``members[k]``.
      * ``"oracle"``: F(S) = weight * fn(S) for a user callback on subsets of
        ``members`` (given as frozensets of global indices).

    ``members`` is stored sorted; values of F are always computed on the
    restriction S ∩ members, so callers never pre-restrict.  Coordinates
    outside ``members`` are never read and base-polytope points are zero
    there.
    """

    kind: str
    members: tuple[int, ...]
    weight: float = 1.0
    head: tuple[int, ...] | None = None
    tail: tuple[int, ...] | None = None
    table: Mapping[int, float] | None = None
    fn: Callable[[frozenset[int]], float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ALL_KINDS:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.weight < 0 or not math.isfinite(self.weight):
            raise ValueError("weight must be finite and nonnegative")
        if len(self.members) == 0:
            raise ValueError("members must be nonempty")
        if any(b <= a for a, b in zip(self.members, self.members[1:])):
            raise ValueError("members must be strictly increasing")
        members = np.asarray(self.members, dtype=np.intp)
        object.__setattr__(self, "_members_arr", members)
        pos_of = {g: p for p, g in enumerate(self.members)}
        if self.kind in _CUT_KINDS:
            head = self.head if self.head is not None else self.members
            tail = self.tail if self.tail is not None else self.members
            object.__setattr__(
                self, "_head_pos", np.asarray([pos_of[g] for g in head], dtype=np.intp)
            )
            object.__setattr__(
                self, "_tail_pos", np.asarray([pos_of[g] for g in tail], dtype=np.intp)
            )
        object.__setattr__(self, "_sqrt_w", math.sqrt(self.weight))

    # Derived arrays (set in __post_init__).
    @property
    def members_arr(self) -> np.ndarray:
        return self._members_arr  # type: ignore[attr-defined]

    @property
    def head_pos(self) -> np.ndarray:
        return self._head_pos  # type: ignore[attr-defined]

    @property
    def tail_pos(self) -> np.ndarray:
        return self._tail_pos  # type: ignore[attr-defined]

    @property
    def sqrt_w(self) -> float:
        return self._sqrt_w  # type: ignore[attr-defined]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_cut(self) -> bool:
        return self.kind in _CUT_KINDS


def graph_edge_cut(i: int, j: int, weight: float = 1.0) -> SubmodularAtom:
    """Two-endpoint cut: F(S) = sqrt(weight) iff S separates i from j."""
    if int(i) == int(j):
        raise ValueError("graph edge needs two distinct endpoints")
    members = _check_indices("members", (i, j))
    return SubmodularAtom("edge", members, float(weight))


def hyperedge_cut(members: Iterable[int], weight: float = 1.0) -> SubmodularAtom:
    """Undirected hyperedge cut: F(S) = sqrt(weight) iff ∅ ⊂ S∩members ⊂ members."""
    return SubmodularAtom("hyperedge", _check_indices("members", members), float(weight))


def directed_hyperedge_cut(
    head: Iterable[int],
    tail: Iterable[int],
    members: Iterable[int] | None = None,
    weight: float = 1.0,
) -> SubmodularAtom:
    """Directed hyperedge cut: F(S) = sqrt(weight) iff S meets head and misses
    part of tail.  ``members`` defaults to head ∪ tail and may be a superset.
    """
    h = _check_indices("head", head)
    t = _check_indices("tail", tail)
    if members is None:
        m = tuple(sorted(set(h) | set(t)))
    else:
        m = _check_indices("members", members)
        if not (set(h) <= set(m) and set(t) <= set(m)):
            raise ValueError("head and tail must be subsets of members")
    return SubmodularAtom("directed_hyperedge", m, float(weight), head=h, tail=t)


def general_oracle(
    members: Iterable[int],
    fn: Callable[[frozenset[int]], float] | None = None,
    table: Mapping[int, float] | None = None,
    weight: float = 1.0,
) -> SubmodularAtom:
    """General component from a value table (bitmask over member positions) or
    a callback.  Normalization F(∅)=0 is validated; submodularity is trusted.
    """
    m = _check_indices("members", members)
    if (fn is None) == (table is None):
        raise ValueError("provide exactly one of fn or table")
    if table is not None:
        full = 1 << len(m)
        tbl = {int(k): float(v) for k, v in table.items()}
        if set(tbl) != set(range(full)):
            raise ValueError(f"table must cover all {full} subsets of members")
        if abs(tbl[0]) > 0:
            raise ValueError("table must be normalized: value of the empty set is 0")
        if any(v < 0 or not math.isfinite(v) for v in tbl.values()):
            raise ValueError("table values must be finite and nonnegative")
        return SubmodularAtom("table", m, float(weight), table=tbl)
    if abs(fn(frozenset())) > 0:  # type: ignore[misc]
        raise ValueError("oracle must be normalized: fn(empty set) == 0")
    return SubmodularAtom("oracle", m, float(weight), fn=fn)


# ---------------------------------------------------------------------------
# Evaluation


def _value_on_positions(atom: SubmodularAtom, pos: frozenset[int]) -> float:
    """F at a subset given by member *positions* (already restricted)."""
    if atom.kind in _CUT_KINDS:
        if atom.kind == "directed_hyperedge":
            hits_head = any(p in pos for p in atom.head_pos)
            misses_tail = any(p not in pos for p in atom.tail_pos)
            return atom.sqrt_w if (hits_head and misses_tail) else 0.0
        k = len(pos)
        return atom.sqrt_w if 0 < k < atom.size else 0.0
    if atom.kind == "table":
        mask = 0
        for p in pos:
            mask |= 1 << p
        return atom.weight * atom.table[mask]  # type: ignore[index]
    subset = frozenset(atom.members[p] for p in pos)
    return atom.weight * atom.fn(subset)  # type: ignore[misc]


def evaluate(atom: SubmodularAtom, S: Iterable[int]) -> float:
    """Evaluate F_r on S ∩ S_r.

    Args:
        atom: the component.
        S: any iterable of global indices (indices outside the incidence set
           are ignored).

    Returns:
        F_r(S ∩ S_r), a nonnegative float; 0.0 for the empty restriction.
    """
    s = set(S)
    pos = frozenset(p for p, g in enumerate(atom.members) if g in s)
    return _value_on_positions(atom, pos)


# ---------------------------------------------------------------------------
# Greedy linear minimization over the base polytope


def _greedy_local(atom: SubmodularAtom, c_loc: np.ndarray) -> np.ndarray:
    """argmin_{q ∈ B_r} <c, q> over local coordinates (length |S_r|).

    Indices are sorted by c ascending, ties broken by position ascending
    (stable), and q at the k-th sorted index is F(first k) − F(first k−1).
    """
    m = atom.size
    q = np.zeros(m)
    if atom.is_cut:
        if m == 1:
            return q
        hp, tp = atom.head_pos, atom.tail_pos
        ch = c_loc[hp]
        u = int(hp[int(np.argmin(ch))])  # first head in the sorted order
        ct = c_loc[tp]
        rev = tp[::-1]
        v = int(rev[int(np.argmax(c_loc[rev]))])  # last tail in the sorted order
        cu, cv = float(c_loc[u]), float(c_loc[v])
        if cu < cv or (cu == cv and u < v):
            q[u] = atom.sqrt_w
            q[v] = -atom.sqrt_w
        return q
    order = np.argsort(c_loc, kind="stable")
    prev = 0.0
    running: set[int] = set()
    for p in order:
        running.add(int(p))
        cur = _value_on_positions(atom, frozenset(running))
        q[p] = cur - prev
        prev = cur
    return q


def greedy_linear_minimizer(atom: SubmodularAtom, c: np.ndarray) -> np.ndarray:
    """Minimize <c, q> over the base polytope B_r by Edmonds' greedy rule.

    Args:
        atom: the component.
        c: dense cost vector (length covering all members).

    Returns:
        Dense vector q of the same length as c, zero outside the incidence
        set, with q(S) ≤ F(S) for every S and q(S_r) = F(S_r).
    """
    c = np.asarray(c, dtype=float)
    q = np.zeros(len(c))
    q[atom.members_arr] = _greedy_local(atom, c[atom.members_arr])
    return q


def lovasz_extension(atom: SubmodularAtom, x: np.ndarray) -> float:
    """Lovász extension f_r(x) = max_{q ∈ B_r} <q, x>.

    Equals the telescoped sum Σ_k F(top-k set)(x_(k) − x_(k+1)) over the
    coordinates of the incidence set sorted descending.  Closed forms are
    used for cut components:

      * edge: sqrt(w)·|x_i − x_j|
      * hyperedge: sqrt(w)·(max − min over members)
      * directed hyperedge: sqrt(w)·max(0, max over head − min over tail)
    """
    x = np.asarray(x, dtype=float)
    xl = x[atom.members_arr]
    if atom.is_cut:
        if atom.size == 1:
            return 0.0
        hi = float(np.max(xl[atom.head_pos]))
        lo = float(np.min(xl[atom.tail_pos]))
        return atom.sqrt_w * max(0.0, hi - lo)
    # Σ_k F(top-k)(x_k − x_{k+1}) telescopes to Σ_k (F_k − F_{k−1})·x_k,
    # i.e. the inner product with the greedy maximizer.
    order = np.argsort(-xl, kind="stable")
    total = 0.0
    prev = 0.0
    running: set[int] = set()
    for p in order:
        running.add(int(p))
        cur = _value_on_positions(atom, frozenset(running))
        total += (cur - prev) * float(xl[p])
        prev = cur
    return total


def base_polytope_contains(atom: SubmodularAtom, y: np.ndarray, tol: float = 1e-9) -> bool:
    """Exhaustively test y ∈ B_r (test helper; |S_r| ≤ 20 only).

    Checks y(S) ≤ F(S) + tol for every S ⊆ S_r, |y(S_r) − F(S_r)| ≤ tol,
    and that y vanishes off the incidence set.
    """
    if atom.size > EXHAUSTIVE_LIMIT:
        raise BoundUnavailableError(
            f"membership check needs 2^{atom.size} subsets (limit 2^{EXHAUSTIVE_LIMIT})"
        )
    y = np.asarray(y, dtype=float)
    off = np.ones(len(y), dtype=bool)
    off[atom.members_arr] = False
    if np.any(np.abs(y[off]) > tol):
        return False
    yl = y[atom.members_arr]
    m = atom.size
    for bits in range(1 << m):
        pos = frozenset(p for p in range(m) if bits >> p & 1)
        val = _value_on_positions(atom, pos)
        ys = float(sum(yl[p] for p in pos))
        if bits == (1 << m) - 1:
            if abs(ys - val) > tol:
                return False
        elif ys > val + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class DiagnosticBounds:
    """Condition quantities for the dual solvers.

    rho_sq_upper bounds Σ_r (max_{y∈B_r} ‖y‖₁)² via the per-component bound
    ‖y_r‖₁ ≤ 2·max_S F_r(S); mu is the two-metric contraction constant
    max{Σ_i W¹_ii · Σ_j 1/W²_jj, (9/4)·rho_sq_upper·Σ_i W¹_ii + 1}.
    """

    rho_sq_upper: float
    mu: float
    atom_max_values: tuple[float, ...]


def atom_max_value(atom: SubmodularAtom) -> float:
    """max_S F_r(S); closed form for cuts, exhaustive for small general atoms."""
    if atom.is_cut:
        if atom.size == 1:
            return 0.0
        if atom.kind == "directed_hyperedge":
            h, t = set(atom.head_pos.tolist()), set(atom.tail_pos.tolist())
            if h == t and len(h) == 1:
                return 0.0
        return atom.sqrt_w
    if atom.kind == "table":
        return atom.weight * max(atom.table.values())  # type: ignore[union-attr]
    if atom.size > EXHAUSTIVE_LIMIT:
        raise BoundUnavailableError(
            f"max_S F over 2^{atom.size} subsets is unavailable (limit 2^{EXHAUSTIVE_LIMIT})"
        )
    best = 0.0
    for bits in range(1 << atom.size):
        pos = frozenset(p for p in range(atom.size) if bits >> p & 1)
        best = max(best, _value_on_positions(atom, pos))
    return best


def _diag_array(w, n: int | None = None) -> np.ndarray:
    if isinstance(w, WeightMatrix):
        return w.diag
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0 and n is not None:
        arr = np.full(n, float(arr))
    return arr


def diagnostics(atoms: Sequence[SubmodularAtom], w1, w2) -> DiagnosticBounds:
    """Compute the solver diagnostics for a decomposition under two metrics.

    Args:
        atoms: the components of the decomposition.
        w1, w2: positive diagonal weights (arrays or WeightMatrix), matching
            the ground-set length.

    Returns:
        DiagnosticBounds with rho_sq_upper = Σ_r (2·max_S F_r)² and the
        corresponding mu value.
    """
    d1 = _diag_array(w1)
    d2 = _diag_array(w2)
    maxes = tuple(atom_max_value(a) for a in atoms)
    rho_sq = float(sum((2.0 * v) ** 2 for v in maxes))
    s1 = float(np.sum(d1))
    mu = max(s1 * float(np.sum(1.0 / d2)), 2.25 * rho_sq * s1 + 1.0)
    return DiagnosticBounds(rho_sq_upper=rho_sq, mu=mu, atom_max_values=maxes)


def max_base_norm_sq(atom: SubmodularAtom, wtilde) -> float:
    """Q² = max_{q ∈ B_r} ‖q‖²_wtilde, the squared metric radius of B_r.

    Closed form for cut components (the vertices are sqrt(w)(e_u − e_v) for
    u ∈ head, v ∈ tail, u ≠ v, plus possibly 0); brute force over greedy
    vertices for small general components.
    """
    wt = _diag_array(wtilde)[atom.members_arr]
    if atom.is_cut:
        if atom.size == 1:
            return 0.0
        hp, tp = atom.head_pos, atom.tail_pos
        best = 0.0
        # top-2 metric weights on each side, then the best admissible pair
        h_sorted = sorted(((float(wt[p]), int(p)) for p in hp), reverse=True)[:2]
        t_sorted = sorted(((float(wt[p]), int(p)) for p in tp), reverse=True)[:2]
        for wu, u in h_sorted:
            for wv, v in t_sorted:
                if u != v:
                    best = max(best, wu + wv)
        return atom.weight * best
    if atom.size > 8:
        raise BoundUnavailableError("vertex scan limited to |S_r| ≤ 8 for general atoms")
    best = 0.0
    for perm in itertools.permutations(range(atom.size)):
        prev = 0.0
        running: set[int] = set()
        q = np.zeros(atom.size)
        for p in perm:
            running.add(p)
            cur = _value_on_positions(atom, frozenset(running))
            q[p] = cur - prev
            prev = cur
        best = max(best, float(np.dot(wt, q * q)))
    return best


# ---------------------------------------------------------------------------
# Weights


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Positive diagonal weight matrix with the usual weighted-norm helpers."""

    diag: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.diag, dtype=float)
        if d.ndim != 1:
            raise ValueError("diagonal must be one-dimensional")
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValueError("diagonal entries must be finite and strictly positive")
        object.__setattr__(self, "diag", d)

    @property
    def n(self) -> int:
        return len(self.diag)

    def inverse(self) -> "WeightMatrix":
        return WeightMatrix(1.0 / self.diag)

    def sqrt(self) -> "WeightMatrix":
        return WeightMatrix(np.sqrt(self.diag))

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.dot(self.diag * np.asarray(x), np.asarray(y)))

    def norm_sq(self, x: np.ndarray) -> float:
        x = np.asarray(x)
        return float(np.dot(self.diag, x * x))

    def norm(self, x: np.ndarray) -> float:
        return math.sqrt(self.norm_sq(x))
