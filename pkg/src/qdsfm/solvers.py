"""Dual solvers for quadratic decomposable submodular minimization.

The primal problem

    min_x  ‖x − a‖²_W + Σ_r f_r(x)²

(W a positive diagonal, each f_r the extension of a normalized submodular
component) is handled through its dual: find, for every component, a point
(y_r, φ_r) of the cone {φ ≥ 0, y ∈ φ·B_r} minimizing

    g(y, φ) = ‖Σ_r y_r − 2Wa‖²_{W⁻¹} + Σ_r φ_r²,

whose value certifies the primal through dual = ‖a‖²_W − g/4.  The primal
point is recovered as x = a − ½·W⁻¹·Σ_r y_r and the duality gap
primal(x) − dual is the solvers' convergence measure.

Two solvers are provided:

* ``rcd_solve`` — randomized coordinate descent over components: each step
  re-projects one component's dual block against the residual left by the
  others (projection metric W⁻¹).
* ``ap_solve`` — a round-based scheme that re-splits the fixed total 2Wa
  across components and re-projects every block each round (projection
  metric Ψ·W⁻¹ with Ψ the per-vertex coverage counts), optionally fanned
  out over a thread pool.  With a single component one round coincides
  with one coordinate-descent step.

Both record a checkpoint trace (projection count, primal, dual, gap,
elapsed seconds) and stop on a target gap, an iteration budget, or a
wall-clock limit.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .projection import _fw_local, _mnp_local, _sweep_cut_local
from .submodular import SubmodularAtom, WeightMatrix, lovasz_extension

__all__ = [
    "ProblemInstance",
    "SolveConfig",
    "SolveResult",
    "ConvergenceTrace",
    "TraceRow",
    "primal_objective",
    "dual_objective",
    "primal_from_dual",
    "evaluate_dual_state",
    "rcd_solve",
    "ap_solve",
    "solve",
]

DEFAULT_SEED = 0
_RNG_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """The data of one minimization: anchor ``a``, diagonal weights ``w``
    (the diagonal of W), and the submodular components."""

    a: np.ndarray
    w: np.ndarray
    atoms: tuple[SubmodularAtom, ...]

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("a must be a nonempty vector")
        w = self.w.diag if isinstance(self.w, WeightMatrix) else np.array(self.w, dtype=float)
        if w.shape != a.shape:
            raise ValueError(f"w has shape {w.shape}, expected {a.shape}")
        if not np.all(w > 0):
            raise ValueError("all diagonal weights must be positive")
        atoms = tuple(self.atoms)
        n = a.size
        for idx, atom in enumerate(atoms):
            if not isinstance(atom, SubmodularAtom):
                raise TypeError(f"component {idx} is not a SubmodularAtom")
            if atom.members[-1] >= n or atom.members[0] < 0:
                raise ValueError(
                    f"component {idx} references vertex {atom.members[-1]} "
                    f"outside 0..{n - 1}"
                )
        a.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "atoms", atoms)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def r(self) -> int:
        return len(self.atoms)

    @cached_property
    def winv(self) -> np.ndarray:
        inv = 1.0 / self.w
        inv.flags.writeable = False
        return inv

    @cached_property
    def _two_wa(self) -> np.ndarray:
        v = 2.0 * self.w * self.a
        v.flags.writeable = False
        return v

    @cached_property
    def _wa_sq(self) -> float:
        return float(np.dot(self.w, self.a * self.a))

    @cached_property
    def _penalty(self) -> Callable[[np.ndarray], float]:
        return _penalty_evaluator(self.atoms)


def _penalty_evaluator(atoms: Sequence[SubmodularAtom]) -> Callable[[np.ndarray], float]:
    """Build an evaluator for Σ_r f_r(x)².

    Symmetric cut components of equal size are batched into one index matrix
    so large uniform collections evaluate in a handful of array operations;
    everything else falls back to per-component extension values.
    """
    by_size: dict[int, tuple[list[np.ndarray], list[float]]] = {}
    other: list[SubmodularAtom] = []
    for atom in atoms:
        if atom.kind in ("edge", "hyperedge") and atom.size > 1:
            rows, weights = by_size.setdefault(atom.size, ([], []))
            rows.append(atom.members_arr)
            weights.append(atom.weight)
        else:
            other.append(atom)
    groups = [
        (np.stack(rows), np.asarray(weights)) for rows, weights in by_size.values()
    ]

    def evaluate(x: np.ndarray) -> float:
        total = 0.0
        for members, weights in groups:
            vals = x[members]
            spread = vals.max(axis=1) - vals.min(axis=1)
            total += float(np.dot(weights, spread * spread))
        for atom in other:
            v = lovasz_extension(atom, x)
            total += v * v
        return total

    return evaluate


# ---------------------------------------------------------------------------
# objective values


def primal_objective(instance: ProblemInstance, x) -> float:
    """‖x − a‖²_W + Σ_r f_r(x)²."""
    x = np.asarray(x, dtype=float)
    d = x - instance.a
    return float(np.dot(instance.w, d * d)) + instance._penalty(x)


def dual_objective(instance: ProblemInstance, sum_y, phis) -> tuple[float, float]:
    """Return (g, dual): the dual block objective and the certified bound
    dual = ‖a‖²_W − g/4.  ``sum_y`` is the aggregated Σ_r y_r."""
    sum_y = np.asarray(sum_y, dtype=float)
    resid = sum_y - instance._two_wa
    g = float(np.dot(instance.winv, resid * resid)) + float(np.dot(phis, phis))
    return g, instance._wa_sq - 0.25 * g


def primal_from_dual(instance: ProblemInstance, sum_y) -> np.ndarray:
    """x = a − ½·W⁻¹·Σ_r y_r."""
    return instance.a - 0.5 * instance.winv * np.asarray(sum_y, dtype=float)


class StateEvaluation(NamedTuple):
    x: np.ndarray
    primal: float
    g: float
    dual: float
    gap: float


def evaluate_dual_state(instance: ProblemInstance, sum_y, phis) -> StateEvaluation:
    """Primal point, objective values, and duality gap of a dual state."""
    x = primal_from_dual(instance, sum_y)
    primal = primal_objective(instance, x)
    g, dual = dual_objective(instance, sum_y, phis)
    return StateEvaluation(x, primal, g, dual, primal - dual)


# ---------------------------------------------------------------------------
# configuration, trace, result


@dataclass(frozen=True)
class SolveConfig:
    """Solver knobs.

    ``max_iters`` counts single-component projections for both solvers (an
    alternating-projection round spends one per component and rounds are
    atomic); ``None`` selects 100 projections per component.
    ``checkpoint_stride`` controls how often the trace is extended and the
    stopping rules are checked; ``None`` means once per component count.
    """

    algorithm: str = "rcd"
    max_iters: int | None = None
    target_gap: float | None = None
    checkpoint_stride: int | None = None
    wall_clock_limit: float | None = None
    seed: int = DEFAULT_SEED
    projection: str = "auto"  # auto | exact | mnp | fw
    delta: float = 1e-10
    threads: int = 1

    def __post_init__(self) -> None:
        if self.algorithm not in ("rcd", "ap"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.target_gap is not None and not self.target_gap >= 0:
            raise ValueError("target_gap must be nonnegative")
        if self.checkpoint_stride is not None and self.checkpoint_stride < 1:
            raise ValueError("checkpoint_stride must be at least 1")
        if self.wall_clock_limit is not None and not self.wall_clock_limit >= 0:
            raise ValueError("wall_clock_limit must be nonnegative")
        if self.projection not in ("auto", "exact", "mnp", "fw"):
            raise ValueError(f"unknown projection method {self.projection!r}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


class TraceRow(NamedTuple):
    iteration: int
    primal: float
    dual: float
    gap: float
    seconds: float


@dataclass
class ConvergenceTrace:
    """Checkpoint log; one row per evaluation of the duality gap."""

    rows: list[TraceRow] = field(default_factory=list)

    def append(self, iteration: int, primal: float, dual: float, gap: float, seconds: float) -> None:
        self.rows.append(TraceRow(iteration, primal, dual, gap, seconds))

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]


@dataclass(frozen=True, eq=False)
class SolveResult:
    x: np.ndarray
    gap: float
    iterations: int
    converged: bool
    primal: float
    dual: float
    trace: ConvergenceTrace
    sum_y: np.ndarray
    phis: np.ndarray


# ---------------------------------------------------------------------------
# shared machinery


def _bind_projectors(
    atoms: Sequence[SubmodularAtom],
    wt_locs: Sequence[np.ndarray],
    method: str,
    delta: float,
) -> list:
    """Per-component projection callables target ↦ (y, φ) in local coordinates."""
    projectors = []
    for atom, wt in zip(atoms, wt_locs):
        chosen = method
        if chosen == "auto":
            chosen = "exact" if atom.is_cut else "mnp"
        if chosen == "exact":
            if not atom.is_cut:
                raise ValueError(
                    "exact projection requires cut components; "
                    "use the mnp or fw method for general ones"
                )

            def proj(tgt, _a=atom, _w=wt):
                return _sweep_cut_local(_a, _w, tgt)

        elif chosen == "mnp":
            cap = 100 * atom.size

            def proj(tgt, _a=atom, _w=wt, _c=cap, _d=delta):
                y, phi, _, _, _, _ = _mnp_local(_a, _w, tgt, _d, _c, False)
                return y, phi

        else:  # fw

            def proj(tgt, _a=atom, _w=wt, _c=100 * atom.size**2, _d=delta):
                y, phi, _, _, _, _ = _fw_local(_a, _w, tgt, _d, _c, False)
                return y, phi

        projectors.append(proj)
    return projectors


def _accumulate(n: int, mems: Sequence[np.ndarray], ys: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros(n)
    for mem, y in zip(mems, ys):
        out[mem] += y
    return out


def _trivial_result(instance: ProblemInstance, config: SolveConfig) -> SolveResult:
    state = evaluate_dual_state(instance, np.zeros(instance.n), np.zeros(0))
    trace = ConvergenceTrace()
    trace.append(0, state.primal, state.dual, state.gap, 0.0)
    converged = config.target_gap is not None and state.gap <= config.target_gap
    return SolveResult(
        x=state.x,
        gap=state.gap,
        iterations=0,
        converged=converged,
        primal=state.primal,
        dual=state.dual,
        trace=trace,
        sum_y=np.zeros(instance.n),
        phis=np.zeros(0),
    )


# ---------------------------------------------------------------------------
# randomized coordinate descent


def rcd_solve(instance: ProblemInstance, config: SolveConfig = SolveConfig()) -> SolveResult:
    """Randomized coordinate descent on the dual.

    Each iteration draws a component uniformly at random and replaces its
    dual block by the cone projection of what the remaining blocks leave of
    the total 2Wa, under the metric W⁻¹.  The aggregate Σ_r y_r is updated
    incrementally and re-accumulated at every checkpoint.
    """
    n, big_r = instance.n, instance.r
    if big_r == 0:
        return _trivial_result(instance, config)
    max_iters = config.max_iters if config.max_iters is not None else 100 * big_r
    stride = config.checkpoint_stride if config.checkpoint_stride is not None else big_r

    rng = np.random.default_rng(config.seed)
    winv = instance.winv
    two_wa = instance._two_wa
    mems = [atom.members_arr for atom in instance.atoms]
    wt_locs = [winv[mem] for mem in mems]
    base = [two_wa[mem] for mem in mems]
    projectors = _bind_projectors(instance.atoms, wt_locs, config.projection, config.delta)

    ys = [np.zeros(mem.size) for mem in mems]
    phis = np.zeros(big_r)
    sum_y = np.zeros(n)

    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    state = evaluate_dual_state(instance, sum_y, phis)
    trace.append(0, state.primal, state.dual, state.gap, time.perf_counter() - t0)
    converged = config.target_gap is not None and state.gap <= config.target_gap

    buf = np.empty(0, dtype=np.int64)
    pos = 0
    it = 0
    while not converged and it < max_iters:
        if pos == buf.size:
            buf = rng.integers(0, big_r, size=_RNG_CHUNK)
            pos = 0
        r = int(buf[pos])
        pos += 1
        mem = mems[r]
        target = base[r] - sum_y[mem] + ys[r]
        y_new, phi_new = projectors[r](target)
        sum_y[mem] += y_new - ys[r]
        ys[r] = y_new
        phis[r] = phi_new
        it += 1
        if it % stride == 0 or it == max_iters:
            sum_y = _accumulate(n, mems, ys)
            state = evaluate_dual_state(instance, sum_y, phis)
            elapsed = time.perf_counter() - t0
            trace.append(it, state.primal, state.dual, state.gap, elapsed)
            if config.target_gap is not None and state.gap <= config.target_gap:
                converged = True
            elif config.wall_clock_limit is not None and elapsed >= config.wall_clock_limit:
                break

    return SolveResult(
        x=state.x,
        gap=state.gap,
        iterations=it,
        converged=converged,
        primal=state.primal,
        dual=state.dual,
        trace=trace,
        sum_y=sum_y,
        phis=phis,
    )


# ---------------------------------------------------------------------------
# alternating projections


def ap_solve(instance: ProblemInstance, config: SolveConfig = SolveConfig()) -> SolveResult:
    """Round-based alternating projections on the dual.

    Every round re-splits the fixed total 2Wa among the components —
    λ_r = y_r − s restricted to the component's vertices, with
    s = Ψ⁻¹(Σ y_r − 2Wa) and Ψ the coverage counts — and projects each λ_r
    back onto its cone under the metric Ψ·W⁻¹.  All blocks are refreshed
    from the same snapshot, so rounds parallelize across a thread pool
    without changing the result.
    """
    n, big_r = instance.n, instance.r
    if big_r == 0:
        return _trivial_result(instance, config)
    max_iters = config.max_iters if config.max_iters is not None else 100 * big_r
    stride = config.checkpoint_stride if config.checkpoint_stride is not None else big_r
    rounds = max(1, max_iters // big_r) if max_iters > 0 else 0
    stride_rounds = max(1, stride // big_r)

    w = instance.w
    two_wa = instance._two_wa
    mems = [atom.members_arr for atom in instance.atoms]
    psi = np.zeros(n)
    for mem in mems:
        psi[mem] += 1.0
    covered = psi > 0
    wt_locs = [psi[mem] / w[mem] for mem in mems]
    projectors = _bind_projectors(instance.atoms, wt_locs, config.projection, config.delta)

    ys = [np.zeros(mem.size) for mem in mems]
    phis = np.zeros(big_r)
    sum_y = np.zeros(n)
    s = np.zeros(n)

    def block(r: int):
        return projectors[r](ys[r] - s[mems[r]])

    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    state = evaluate_dual_state(instance, sum_y, phis)
    trace.append(0, state.primal, state.dual, state.gap, time.perf_counter() - t0)
    converged = config.target_gap is not None and state.gap <= config.target_gap

    executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    rd = 0
    try:
        while not converged and rd < rounds:
            s = np.zeros(n)
            np.divide(sum_y - two_wa, psi, out=s, where=covered)
            if executor is not None:
                updates = list(executor.map(block, range(big_r)))
            else:
                updates = [block(r) for r in range(big_r)]
            for r, (y_new, phi_new) in enumerate(updates):
                ys[r] = y_new
                phis[r] = phi_new
            sum_y = _accumulate(n, mems, ys)
            rd += 1
            if rd % stride_rounds == 0 or rd == rounds:
                state = evaluate_dual_state(instance, sum_y, phis)
                elapsed = time.perf_counter() - t0
                trace.append(rd * big_r, state.primal, state.dual, state.gap, elapsed)
                if config.target_gap is not None and state.gap <= config.target_gap:
                    converged = True
                elif config.wall_clock_limit is not None and elapsed >= config.wall_clock_limit:
                    break
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    return SolveResult(
        x=state.x,
        gap=state.gap,
        iterations=rd * big_r,
        converged=converged,
        primal=state.primal,
        dual=state.dual,
        trace=trace,
        sum_y=sum_y,
        phis=phis,
    )


def solve(instance: ProblemInstance, config: SolveConfig = SolveConfig()) -> SolveResult:
    """Dispatch to the solver named by ``config.algorithm``."""
    if config.algorithm == "ap":
        return ap_solve(instance, config)
    return rcd_solve(instance, config)
