"""Projection onto cones induced by submodular base polytopes.

For a component with base polytope B and a positive diagonal metric W̃, the
projection of a vector a is

    Π_C(a) = argmin_{(y, φ)}  ‖y − a‖²_W̃ + φ²   s.t.  φ ≥ 0,  y ∈ φ·B.

Three interchangeable oracles are provided:

* ``project_mnp`` — an active-set method over a conic hull of base-polytope
  points, alternating MAJOR steps (add the greedy point that certifies
  descent) and MINOR steps (re-solve the affine coefficient problem and
  retract onto the nonnegative orthant).  Terminates when the certificate
  min_q <y−a, q>_W̃ + φ ≥ −δ holds, which pins the objective within
  δ·‖a‖_W̃ of the optimum.
* ``project_fw`` — conditional-gradient iterations with an exact
  two-variable line search (rescale the current point, blend in the greedy
  point); objective error decays like 2‖a‖²_W̃·Q²/(k+2) with Q the metric
  radius of B.
* ``project_exact`` — a direct two-pointer sweep for cut components
  (edges, hyperedges, directed hyperedges), exact up to roundoff.

All three accept dense inputs and work on the component's incidence set
internally; solvers call the ``*_local`` variants directly with pre-gathered
slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .submodular import SubmodularAtom, WeightMatrix, _greedy_local, base_polytope_contains

__all__ = [
    "ConePoint",
    "ProjectionParams",
    "ProjectionReport",
    "ProjectionNumericsError",
    "affine_minimizer",
    "project_mnp",
    "project_fw",
    "project_exact",
    "project_cone",
    "projection_objective",
]

_DEDUP_TOL = 1e-12
_SNAP_TOL = 1e-12


class ProjectionNumericsError(RuntimeError):
    """Raised when the small affine solve cannot reach its residual tolerance."""


@dataclass(frozen=True)
class ConePoint:
    """A feasible point (y, φ) of the cone {φ ≥ 0, y ∈ φ·B}.

    ``y`` is stored densely over the component's incidence set only.
    """

    members: tuple[int, ...]
    y: np.ndarray
    phi: float

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[list(self.members)] = self.y
        return out

    def feasible(self, atom: SubmodularAtom, tol: float = 1e-8) -> bool:
        """Check φ ≥ 0 and y ∈ φ·B (exhaustive; small components only)."""
        if self.phi < -tol:
            return False
        n = max(self.members) + 1
        if self.phi <= tol:
            return bool(np.max(np.abs(self.y), initial=0.0) <= tol)
        return base_polytope_contains(atom, self.dense(n) / self.phi, tol=tol)


@dataclass(frozen=True)
class ProjectionParams:
    """Tolerance and budget knobs shared by the iterative oracles.

    ``max_major`` caps MAJOR loops for the active-set method and line-search
    iterations for conditional gradient; ``None`` selects the defaults
    100·|S_r| and 100·|S_r|² respectively.
    """

    delta: float = 1e-10
    max_major: int | None = None
    method: str = "auto"  # auto | mnp | fw | exact

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_major is not None and self.max_major < 1:
            raise ValueError("max_major must be at least 1")
        if self.method not in ("auto", "mnp", "fw", "exact"):
            raise ValueError(f"unknown projection method {self.method!r}")


@dataclass(frozen=True)
class ProjectionReport:
    method: str
    converged: bool
    iterations: int
    certificate: float
    h: float
    h_history: tuple[float, ...] = field(default=())


def _as_diag(w, n: int) -> np.ndarray:
    if isinstance(w, WeightMatrix):
        return w.diag
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    return arr


def projection_objective(atom: SubmodularAtom, wtilde, a, point: ConePoint) -> float:
    """h(y, φ) = ‖y − a‖²_W̃ + φ² evaluated on the incidence set."""
    a = np.asarray(a, dtype=float)
    wt = _as_diag(wtilde, len(a))[atom.members_arr]
    d = point.y - a[atom.members_arr]
    return float(np.dot(wt, d * d) + point.phi**2)


# ---------------------------------------------------------------------------
# Affine coefficient subproblem


def _affine_minimizer_local(points: list[np.ndarray], wt: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Solve argmin_α ‖Σ α_i q_i − a‖²_wt + (Σ α_i)² without sign constraints.

    Normal equations: (G + 11ᵀ)α = v with G_ij = <q_i, q_j>_wt and
    v_i = <q_i, a>_wt.  The system is a Gram system and hence always
    consistent; a rank-deficient solve falls back to the least-norm solution.
    """
    Q = np.stack(points)  # k × m
    Gp = Q @ (wt[None, :] * Q).T + 1.0
    v = Q @ (wt * a)
    try:
        alpha = np.linalg.solve(Gp, v)
    except np.linalg.LinAlgError:
        alpha = np.linalg.lstsq(Gp, v, rcond=None)[0]
    resid = float(np.linalg.norm(Gp @ alpha - v))
    if resid > 1e-8 * (1.0 + float(np.linalg.norm(v))):
        alpha = np.linalg.lstsq(Gp, v, rcond=None)[0]
        resid = float(np.linalg.norm(Gp @ alpha - v))
        if resid > 1e-8 * (1.0 + float(np.linalg.norm(v))):
            raise ProjectionNumericsError(
                f"affine subproblem residual {resid:.3e} exceeds tolerance"
            )
    return alpha


def affine_minimizer(points: Sequence[np.ndarray], wtilde, a) -> np.ndarray:
    """Dense-input wrapper for the affine coefficient subproblem."""
    a = np.asarray(a, dtype=float)
    wt = _as_diag(wtilde, len(a))
    return _affine_minimizer_local([np.asarray(p, dtype=float) for p in points], wt, a)


# ---------------------------------------------------------------------------
# Active-set (min-norm-point style) oracle


def _h_val(wt: np.ndarray, y: np.ndarray, a: np.ndarray, phi: float) -> float:
    d = y - a
    return float(np.dot(wt, d * d) + phi * phi)


def _mnp_local(
    atom: SubmodularAtom,
    wt: np.ndarray,
    a: np.ndarray,
    delta: float,
    max_major: int,
    record: bool,
) -> tuple[np.ndarray, float, tuple[float, ...], float, bool, int]:
    q1 = _greedy_local(atom, -wt * a)
    lam1 = max(0.0, float(np.dot(wt * a, q1)) / (1.0 + float(np.dot(wt, q1 * q1))))
    points: list[np.ndarray] = [q1]
    lam = np.array([lam1])
    y = lam1 * q1
    phi = lam1
    hist = [_h_val(wt, y, a, phi)] if record else []
    converged = False
    cert = math.nan
    majors = 0
    for majors in range(1, max_major + 1):
        c = wt * (y - a)
        q = _greedy_local(atom, c)
        cert = float(np.dot(c, q)) + phi
        if cert >= -delta:
            converged = True
            break
        # no progress is possible if the greedy point is already active
        if any(float(np.max(np.abs(q - p))) <= _DEDUP_TOL for p in points):
            break
        points.append(q)
        lam = np.append(lam, 0.0)
        # --- MINOR loop: retract the affine optimum onto α ≥ 0 ---
        while True:
            alpha = _affine_minimizer_local(points, wt, a)
            if np.all(alpha >= 0.0):
                lam = alpha
                break
            neg = np.flatnonzero(alpha < 0.0)
            ratios = lam[neg] / (lam[neg] - alpha[neg])
            theta = float(np.min(ratios))  # first index wins ties via argmin order
            lam = lam + theta * (alpha - lam)
            lam[lam <= _SNAP_TOL] = 0.0
            keep = lam > 0.0
            if not np.all(keep):
                points = [p for p, k in zip(points, keep) if k]
                lam = lam[keep]
            if len(points) == 0:
                break  # retracted onto the apex; next MAJOR loop decides
        lam[lam <= _SNAP_TOL] = 0.0
        keep = lam > 0.0
        if not np.all(keep) and np.any(keep):
            points = [p for p, k in zip(points, keep) if k]
            lam = lam[keep]
        y = np.einsum("i,ij->j", lam, np.stack(points)) if len(points) else np.zeros_like(a)
        phi = float(np.sum(lam))
        if record:
            hist.append(_h_val(wt, y, a, phi))
    return y, phi, tuple(hist), cert, converged, majors


# ---------------------------------------------------------------------------
# Conditional-gradient oracle


def _fw_local(
    atom: SubmodularAtom,
    wt: np.ndarray,
    a: np.ndarray,
    delta: float,
    max_iter: int,
    record: bool,
) -> tuple[np.ndarray, float, tuple[float, ...], float, bool, int]:
    m = atom.size
    y = np.zeros(m)
    phi = 0.0
    wta = wt * a
    haa = float(np.dot(wta, a))
    hist = [haa] if record else []
    converged = False
    cert = math.nan
    iters = 0
    for iters in range(1, max_iter + 1):
        wty = wt * y
        c = wty - wta
        q = _greedy_local(atom, c)
        cert = float(np.dot(c, q)) + phi
        if cert >= -delta:
            converged = True
            break
        # exact line search over (γ1, γ2) ≥ 0 for γ1·(y, φ) + γ2·(q, 1)
        a11 = float(np.dot(wty, y)) + phi * phi
        a12 = float(np.dot(wty, q)) + phi
        a22 = float(np.dot(wt, q * q)) + 1.0
        b1 = float(np.dot(y, wta))
        b2 = float(np.dot(q, wta))
        best = (haa, 0.0, 0.0)  # h at the apex

        def consider(g1: float, g2: float) -> None:
            nonlocal best
            h = (
                a11 * g1 * g1
                + 2.0 * a12 * g1 * g2
                + a22 * g2 * g2
                - 2.0 * (b1 * g1 + b2 * g2)
                + haa
            )
            if h < best[0]:
                best = (h, g1, g2)

        det = a11 * a22 - a12 * a12
        if det > 1e-300:
            g1 = (b1 * a22 - b2 * a12) / det
            g2 = (b2 * a11 - b1 * a12) / det
            if g1 >= 0.0 and g2 >= 0.0:
                consider(g1, g2)
        consider(0.0, max(0.0, b2 / a22))
        if a11 > 0.0:
            consider(max(0.0, b1 / a11), 0.0)
        _, g1, g2 = best
        y = g1 * y + g2 * q
        phi = g1 * phi + g2
        if record:
            hist.append(best[0])
    return y, phi, tuple(hist), cert, converged, iters


# ---------------------------------------------------------------------------
# Exact sweep for cut components


def _sweep_cut_local(atom: SubmodularAtom, wt: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact cone projection for cut components.

    Reduces to the proximal problem min_z ‖z − b‖²_M + w·f₁(z)² with
    b = W̃a/2 and M = W̃⁻¹ (f₁ the unit-weight cut extension), solved by a
    two-pointer sweep that caps head values at γ and floors tail values at δ
    while walking the balanced path dδ = −(w_H/w_T)dγ; recovery is
    y = a − 2Mz, φ = 2√w·f₁(z).
    """
    m = atom.size
    w = atom.weight
    if m == 1 or w == 0.0:
        return np.zeros(m), 0.0
    metric = 1.0 / wt
    b = 0.5 * wt * a
    hp, tp = atom.head_pos, atom.tail_pos
    bh = b[hp]
    bt = b[tp]
    gamma = float(np.max(bh))
    delta = float(np.min(bt))
    if gamma <= delta:
        return np.zeros(m), 0.0

    mw = metric / w
    oh = np.argsort(-bh, kind="stable")
    hvals = bh[oh].tolist()
    hmass = mw[hp[oh]].tolist()
    ot = np.argsort(bt, kind="stable")
    tvals = bt[ot].tolist()
    tmass = mw[tp[ot]].tolist()
    nh, nt = len(hvals), len(tvals)

    # absorb the arg-extreme ties
    ih = 0
    wH = 0.0
    sH = 0.0
    while ih < nh and hvals[ih] == gamma:
        wH += hmass[ih]
        sH += hmass[ih] * hvals[ih]
        ih += 1
    it = 0
    wT = 0.0
    while it < nt and tvals[it] == delta:
        wT += tmass[it]
        it += 1

    while True:
        gn = hvals[ih] if ih < nh else None
        dn = tvals[it] if it < nt else None
        if gn is None and dn is None:
            break
        cand_t = gamma - (dn - delta) * wT / wH if dn is not None else None
        if cand_t is None or (gn is not None and gn >= cand_t):
            g_c = gn
            d_c = delta + (gamma - gn) * wH / wT
            from_head = True
        else:
            g_c = cand_t
            d_c = dn
            from_head = False
        if (g_c - d_c) + wH * g_c - sH <= 0.0:
            break
        gamma, delta = g_c, d_c
        if from_head:
            while ih < nh and hvals[ih] == gn:
                wH += hmass[ih]
                sH += hmass[ih] * hvals[ih]
                ih += 1
        else:
            while it < nt and tvals[it] == dn:
                wT += tmass[it]
                it += 1

    grad = (gamma - delta) + wH * gamma - sH
    denom = wH * wT + wH + wT
    gs = gamma - grad * wT / denom
    ds = delta + grad * wH / denom

    z = b.copy()
    z[hp] = np.minimum(z[hp], gs)
    z[tp] = np.maximum(z[tp], ds)
    f1 = max(0.0, float(np.max(z[hp])) - float(np.min(z[tp])))
    y = a - 2.0 * metric * z
    phi = 2.0 * math.sqrt(w) * f1
    return y, phi


# ---------------------------------------------------------------------------
# Public wrappers and dispatch


def _resolve_caps(atom: SubmodularAtom, params: ProjectionParams) -> tuple[int, int]:
    mnp_cap = params.max_major if params.max_major is not None else 100 * atom.size
    fw_cap = params.max_major if params.max_major is not None else 100 * atom.size**2
    return mnp_cap, fw_cap


def _gather(atom: SubmodularAtom, wtilde, a) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    wt = _as_diag(wtilde, len(a))
    return wt[atom.members_arr], a[atom.members_arr]


def project_mnp(
    atom: SubmodularAtom,
    wtilde,
    a,
    params: ProjectionParams = ProjectionParams(),
    record_history: bool = True,
) -> tuple[ConePoint, ProjectionReport]:
    """Active-set cone projection.

    Args:
        atom: the component whose cone to project onto.
        wtilde: positive diagonal metric (dense diagonal or WeightMatrix).
        a: dense target vector.
        params: tolerance δ and MAJOR-loop cap.
        record_history: keep the per-MAJOR objective sequence in the report.

    Returns:
        (ConePoint, ProjectionReport); on a cap hit the best iterate so far
        is returned with ``converged=False``.
    """
    wt, al = _gather(atom, wtilde, a)
    cap, _ = _resolve_caps(atom, params)
    y, phi, hist, cert, conv, iters = _mnp_local(atom, wt, al, params.delta, cap, record_history)
    point = ConePoint(atom.members, y, phi)
    return point, ProjectionReport("mnp", conv, iters, cert, _h_val(wt, y, al, phi), hist)


def project_fw(
    atom: SubmodularAtom,
    wtilde,
    a,
    params: ProjectionParams = ProjectionParams(),
    record_history: bool = False,
) -> tuple[ConePoint, ProjectionReport]:
    """Conditional-gradient cone projection (see module docstring)."""
    wt, al = _gather(atom, wtilde, a)
    _, cap = _resolve_caps(atom, params)
    y, phi, hist, cert, conv, iters = _fw_local(atom, wt, al, params.delta, cap, record_history)
    point = ConePoint(atom.members, y, phi)
    return point, ProjectionReport("fw", conv, iters, cert, _h_val(wt, y, al, phi), hist)


def project_exact(atom: SubmodularAtom, wtilde, a) -> tuple[ConePoint, ProjectionReport]:
    """Exact sweep projection for cut components (edge, hyperedge, directed)."""
    if not atom.is_cut:
        raise ValueError("exact projection is only available for cut components")
    wt, al = _gather(atom, wtilde, a)
    y, phi = _sweep_cut_local(atom, wt, al)
    c = wt * (y - al)
    cert = float(np.dot(c, _greedy_local(atom, c))) + phi
    point = ConePoint(atom.members, y, phi)
    return point, ProjectionReport("exact", True, 1, cert, _h_val(wt, y, al, phi), ())


def project_cone(
    atom: SubmodularAtom,
    wtilde,
    a,
    params: ProjectionParams = ProjectionParams(),
) -> tuple[ConePoint, ProjectionReport]:
    """Dispatch on ``params.method``; ``auto`` uses the exact sweep for cut
    components and the active-set method otherwise."""
    method = params.method
    if method == "auto":
        method = "exact" if atom.is_cut else "mnp"
    if method == "exact":
        return project_exact(atom, wtilde, a)
    if method == "mnp":
        return project_mnp(atom, wtilde, a, params)
    return project_fw(atom, wtilde, a, params)


def project_local(
    atom: SubmodularAtom,
    wt: np.ndarray,
    a: np.ndarray,
    method: str,
    delta: float,
    cap: int,
) -> tuple[np.ndarray, float]:
    """Low-overhead local-coordinate projection used by the dual solvers."""
    if method == "exact":
        return _sweep_cut_local(atom, wt, a)
    if method == "mnp":
        y, phi, _, _, _, _ = _mnp_local(atom, wt, a, delta, cap, False)
        return y, phi
    y, phi, _, _, _, _ = _fw_local(atom, wt, a, delta, cap, False)
    return y, phi
