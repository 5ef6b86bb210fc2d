"""File formats used by the command-line tools.

Everything here is plain JSON or CSV:

* instance files      -- ``{"a": [...], "w": 1.0 | [...], "atoms": [...]}``
* component entries   -- ``{"type": "edge" | "hyperedge" | "directed_hyperedge"
                          | "table", "members": [...], "weight": w, ...}``
* hypergraph files    -- ``{"n": N, "edges": [component entries]}``
* label files         -- ``{"labels": {"vertex": class, ...}}``
* schema files        -- ``{"columns": [{"name": ..., "kind": ...}, ...]}``
* solution files      -- ``{"x": [...], "gap": g, "iters": k, "converged": b}``
* trace files         -- CSV with header ``iter,primal,dual,gap,seconds``
* comparison files    -- CSV with header ``method,iter,seconds,gap``

Loaders raise :class:`InputError` (a ``ValueError``) on any malformed input,
with messages that name the offending component index where applicable, so
callers can report a diagnostic and exit instead of surfacing a traceback.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Mapping, Sequence
from typing import Any

import numpy as np

from .applications import Hypergraph, LabeledDataset
from .solvers import ConvergenceTrace, ProblemInstance, SolveResult, TraceRow
from .submodular import (
    SubmodularAtom,
    directed_hyperedge_cut,
    general_oracle,
    graph_edge_cut,
    hyperedge_cut,
)

__all__ = [
    "InputError",
    "atom_to_json",
    "atom_from_json",
    "load_instance",
    "save_instance",
    "load_hypergraph",
    "save_hypergraph",
    "load_labels",
    "load_schema",
    "load_table_rows",
    "load_vector",
    "write_solution",
    "read_solution",
    "write_trace",
    "read_trace",
    "write_comparison",
]


class InputError(ValueError):
    """A problem with user-supplied input (file contents or values)."""


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _dump_json(payload: Any, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)
        f.write("\n")


def _as_index_list(value: Any, what: str) -> list[int]:
    if not isinstance(value, Sequence) or isinstance(value, (str, bytes)):
        raise ValueError(f"{what} must be a list of vertex indices")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"{what} must contain integers, got {v!r}")
        out.append(v)
    return out


# ---------------------------------------------------------------------------
# Components


def atom_to_json(atom: SubmodularAtom) -> dict[str, Any]:
    """Serialize a component to its JSON-friendly dict form.

    Callback-backed components have no finite description and are rejected.
    """
    base: dict[str, Any] = {
        "type": atom.kind,
        "members": [int(v) for v in atom.members],
        "weight": float(atom.weight),
    }
    if atom.kind == "directed_hyperedge":
        base["head"] = [int(v) for v in atom.head]
        base["tail"] = [int(v) for v in atom.tail]
    elif atom.kind == "table":
        base["table"] = {str(k): float(v) for k, v in sorted(atom.table.items())}
    elif atom.kind == "oracle":
        raise InputError("callback-backed components cannot be written to a file")
    return base


def atom_from_json(obj: Any, index: int = 0) -> SubmodularAtom:
    """Parse one component entry; errors name the component by ``index``."""
    try:
        if not isinstance(obj, Mapping):
            raise ValueError(f"expected an object, got {type(obj).__name__}")
        kind = obj.get("type")
        members = _as_index_list(obj.get("members"), "members")
        weight = obj.get("weight", 1.0)
        if isinstance(weight, bool) or not isinstance(weight, (int, float)):
            raise ValueError(f"weight must be a number, got {weight!r}")
        if kind == "edge":
            if len(members) != 2:
                raise ValueError("an edge needs exactly two members")
            return graph_edge_cut(members[0], members[1], float(weight))
        if kind == "hyperedge":
            return hyperedge_cut(members, float(weight))
        if kind == "directed_hyperedge":
            head = _as_index_list(obj.get("head"), "head")
            tail = _as_index_list(obj.get("tail"), "tail")
            return directed_hyperedge_cut(head, tail, members, float(weight))
        if kind == "table":
            table = obj.get("table")
            if not isinstance(table, Mapping):
                raise ValueError("a table component needs a 'table' object")
            parsed: dict[int, float] = {}
            for key, val in table.items():
                try:
                    mask = int(key)
                except (TypeError, ValueError):
                    raise ValueError(f"table key {key!r} is not a subset bitmask")
                parsed[mask] = float(val)
            return general_oracle(members, table=parsed, weight=float(weight))
        raise ValueError(f"unknown component type {kind!r}")
    except (TypeError, ValueError) as exc:
        raise InputError(f"atom {index}: {exc}") from exc


# ---------------------------------------------------------------------------
# Instances


def _parse_weights(raw: Any, n: int) -> np.ndarray:
    if raw is None:
        return np.ones(n)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return np.full(n, float(raw))
    if isinstance(raw, Sequence) and not isinstance(raw, (str, bytes)):
        return np.asarray([float(v) for v in raw])
    raise InputError("'w' must be a positive number or a list of them")


def load_instance(path: str) -> ProblemInstance:
    """Read a problem instance (anchor, vertex weights, components)."""
    obj = _load_json(path)
    if not isinstance(obj, Mapping):
        raise InputError(f"{path}: expected a top-level object")
    if "a" not in obj:
        raise InputError(f"{path}: missing required field 'a'")
    try:
        a = np.asarray([float(v) for v in obj["a"]])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: 'a' must be a list of numbers") from exc
    raw_atoms = obj.get("atoms", [])
    if not isinstance(raw_atoms, Sequence) or isinstance(raw_atoms, (str, bytes)):
        raise InputError(f"{path}: 'atoms' must be a list")
    atoms = tuple(atom_from_json(entry, i) for i, entry in enumerate(raw_atoms))
    w = _parse_weights(obj.get("w"), a.size)
    try:
        return ProblemInstance(a=a, w=w, atoms=atoms)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def save_instance(instance: ProblemInstance, path: str) -> None:
    payload = {
        "a": [float(v) for v in instance.a],
        "w": [float(v) for v in instance.w],
        "atoms": [atom_to_json(atom) for atom in instance.atoms],
    }
    _dump_json(payload, path)


# ---------------------------------------------------------------------------
# Hypergraphs, labels, schemas, tables


def load_hypergraph(path: str) -> Hypergraph:
    obj = _load_json(path)
    if not isinstance(obj, Mapping) or "n" not in obj or "edges" not in obj:
        raise InputError(f"{path}: expected an object with 'n' and 'edges'")
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n <= 0:
        raise InputError(f"{path}: 'n' must be a positive integer")
    raw_edges = obj["edges"]
    if not isinstance(raw_edges, Sequence) or isinstance(raw_edges, (str, bytes)):
        raise InputError(f"{path}: 'edges' must be a list")
    edges = tuple(atom_from_json(entry, i) for i, entry in enumerate(raw_edges))
    try:
        return Hypergraph(n=n, edges=edges)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def save_hypergraph(hypergraph: Hypergraph, path: str) -> None:
    payload = {
        "n": int(hypergraph.n),
        "edges": [atom_to_json(atom) for atom in hypergraph.edges],
    }
    _dump_json(payload, path)


def load_labels(path: str, n: int, num_classes: int | None = None) -> LabeledDataset:
    """Read seed labels: ``{"labels": {"vertex": class, ...}}``."""
    obj = _load_json(path)
    if not isinstance(obj, Mapping) or not isinstance(obj.get("labels"), Mapping):
        raise InputError(f"{path}: expected an object with a 'labels' mapping")
    labels: dict[int, int] = {}
    for key, val in obj["labels"].items():
        try:
            vertex = int(key)
        except (TypeError, ValueError):
            raise InputError(f"{path}: label key {key!r} is not a vertex index")
        if isinstance(val, bool) or not isinstance(val, int):
            raise InputError(f"{path}: label for vertex {vertex} must be an integer")
        labels[vertex] = val
    try:
        return LabeledDataset(n=n, labels=labels, num_classes=num_classes)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def load_schema(path: str) -> list[tuple[str, str]]:
    """Read a column schema: ``{"columns": [{"name": ..., "kind": ...}]}``."""
    obj = _load_json(path)
    if not isinstance(obj, Mapping) or not isinstance(obj.get("columns"), Sequence):
        raise InputError(f"{path}: expected an object with a 'columns' list")
    out: list[tuple[str, str]] = []
    for i, col in enumerate(obj["columns"]):
        if not isinstance(col, Mapping) or "name" not in col or "kind" not in col:
            raise InputError(f"{path}: column {i} needs 'name' and 'kind'")
        out.append((str(col["name"]), str(col["kind"])))
    return out


def load_table_rows(path: str) -> list[dict[str, str]]:
    """Read a CSV file with a header row into a list of row dicts."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                raise InputError(f"{path}: empty file, expected a CSV header")
            return [dict(row) for row in reader]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_vector(path: str, n: int, what: str = "vector") -> np.ndarray:
    """Read a JSON list of ``n`` numbers."""
    obj = _load_json(path)
    if not isinstance(obj, Sequence) or isinstance(obj, (str, bytes)):
        raise InputError(f"{path}: expected a JSON list of numbers")
    try:
        vec = np.asarray([float(v) for v in obj])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {what} entries must be numbers") from exc
    if vec.size != n:
        raise InputError(f"{path}: {what} has {vec.size} entries, expected {n}")
    return vec


# ---------------------------------------------------------------------------
# Results


def write_solution(result: SolveResult, path: str) -> None:
    payload = {
        "x": [float(v) for v in result.x],
        "gap": float(result.gap),
        "iters": int(result.iterations),
        "converged": bool(result.converged),
    }
    _dump_json(payload, path)


def read_solution(path: str) -> dict[str, Any]:
    obj = _load_json(path)
    if not isinstance(obj, Mapping):
        raise InputError(f"{path}: expected a solution object")
    return dict(obj)


_TRACE_HEADER = ["iter", "primal", "dual", "gap", "seconds"]


def write_trace(trace: Iterable[TraceRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_TRACE_HEADER)
        for row in trace:
            writer.writerow(
                [
                    int(row.iteration),
                    repr(float(row.primal)),
                    repr(float(row.dual)),
                    repr(float(row.gap)),
                    repr(float(row.seconds)),
                ]
            )


def read_trace(path: str) -> ConvergenceTrace:
    trace = ConvergenceTrace()
    try:
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != _TRACE_HEADER:
                raise InputError(
                    f"{path}: expected header {','.join(_TRACE_HEADER)}"
                )
            for row in reader:
                trace.append(
                    int(row["iter"]),
                    float(row["primal"]),
                    float(row["dual"]),
                    float(row["gap"]),
                    float(row["seconds"]),
                )
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed trace row ({exc})") from exc
    return trace


def write_comparison(
    records: Iterable[tuple[str, int, float, float]], path: str
) -> None:
    """Write method-comparison rows: ``method,iter,seconds,gap``."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["method", "iter", "seconds", "gap"])
        for method, iteration, seconds, gap in records:
            writer.writerow(
                [method, int(iteration), repr(float(seconds)), repr(float(gap))]
            )
