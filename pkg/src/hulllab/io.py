"""JSON and CSV formats.

State files are human-writable::

    {"alpha": [0, 0.6, 0], "beta": [0, 0, 0],
     "M": [[0, 0.8, 0], [0, 0, 0], [0, 0, 0]],
     "params": {"r": 1, "s": 1, "p": 0}}

``M`` is row-major.  JSON floats are written with ``repr`` (shortest string
that parses back to the same double); CSV cells use 17 significant digits.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from typing import Any, Iterable

import numpy as np

from .bounds import Verdict
from .laminates import LaminateTree, Leaf, Split, WitnessPair
from .state import Direction, Params, State


class FormatError(ValueError):
    """Input that does not follow the documented schema."""


CSV_COLUMNS = (
    ["alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"]
    + [f"M{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    + ["verdict", "nuclear_norm", "G", "ohm_defect"]
)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False)


# -- encoders ---------------------------------------------------------------


def params_to_json(p: Params) -> dict:
    return {"r": p.r, "s": p.s, "p": p.p}


def state_to_json(z: State, params: Params | None = None) -> dict:
    out = {"alpha": z.alpha.tolist(), "beta": z.beta.tolist(), "M": z.M.tolist()}
    if params is not None:
        out["params"] = params_to_json(params)
    return out


def direction_to_json(d: Direction) -> dict:
    out = {"alpha_bar": d.alpha_bar.tolist(), "beta_bar": d.beta_bar.tolist(), "M_bar": d.M_bar.tolist()}
    out["witness"] = None if d.witness is None else {"xi": d.witness[0].tolist(), "c": d.witness[1]}
    return out


def tree_to_json(tree: LaminateTree) -> dict:
    if isinstance(tree, Leaf):
        return {"type": "leaf", "state": state_to_json(tree.state)}
    out = {
        "type": "split",
        "kind": tree.kind,
        "state": state_to_json(tree.state),
        "direction": direction_to_json(tree.direction),
        "t1": tree.t1,
        "t2": tree.t2,
        "weights": list(tree.weights),
        "left": tree_to_json(tree.left),
        "right": tree_to_json(tree.right),
    }
    if tree.witness is not None:
        out["witness_pair"] = {"abar": tree.witness.abar.tolist(), "bbar": tree.witness.bbar.tolist(), "c": tree.witness.c}
    return out


def verdict_to_json(v: Verdict) -> dict:
    return {"tag": v.tag, "kind": v.kind.value, "boundary": None if v.sub is None else v.sub.value}


# -- decoders ---------------------------------------------------------------


def _field(obj: Any, key: str, what: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{what} must be a JSON object")
    if key not in obj:
        raise FormatError(f"{what} is missing {key!r}")
    return obj[key]


def _array(x: Any, shape: tuple, what: str) -> np.ndarray:
    if isinstance(x, bool) or x is None:
        raise FormatError(f"{what} must be numeric")
    try:
        a = np.array(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what} must be numeric: {exc}") from None
    if a.shape != shape:
        raise FormatError(f"{what} must have shape {list(shape)}, got {list(a.shape)}")
    if not np.isfinite(a).all():
        raise FormatError(f"{what} has non-finite entries")
    return a


def _number(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise FormatError(f"{what} must be a number")
    return float(x)


def params_from_json(obj: Any) -> Params:
    try:
        return Params(
            _number(_field(obj, "r", "params"), "r"),
            _number(_field(obj, "s", "params"), "s"),
            _number(obj.get("p", 0.0), "p"),
        )
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"invalid params: {exc}") from None


def state_from_json(obj: Any) -> State:
    return State(
        _array(_field(obj, "alpha", "state"), (3,), "alpha"),
        _array(_field(obj, "beta", "state"), (3,), "beta"),
        _array(_field(obj, "M", "state"), (3, 3), "M"),
    )


def direction_from_json(obj: Any) -> Direction:
    w = obj.get("witness") if isinstance(obj, dict) else None
    witness = None
    if w is not None:
        witness = (_array(_field(w, "xi", "witness"), (3,), "xi"), _number(_field(w, "c", "witness"), "c"))
    return Direction(
        _array(_field(obj, "alpha_bar", "direction"), (3,), "alpha_bar"),
        _array(_field(obj, "beta_bar", "direction"), (3,), "beta_bar"),
        _array(_field(obj, "M_bar", "direction"), (3, 3), "M_bar"),
        witness,
    )


def tree_from_json(obj: Any) -> LaminateTree:
    kind = _field(obj, "type", "tree node")
    if kind == "leaf":
        return Leaf(state_from_json(_field(obj, "state", "leaf")))
    if kind != "split":
        raise FormatError(f"tree node type must be 'leaf' or 'split', got {kind!r}")
    wp = obj.get("witness_pair")
    witness = None
    if wp is not None:
        witness = WitnessPair(
            _array(_field(wp, "abar", "witness_pair"), (3,), "abar"),
            _array(_field(wp, "bbar", "witness_pair"), (3,), "bbar"),
            _number(_field(wp, "c", "witness_pair"), "c"),
        )
    try:
        return Split(
            state_from_json(_field(obj, "state", "split")),
            direction_from_json(_field(obj, "direction", "split")),
            _number(_field(obj, "t1", "split"), "t1"),
            _number(_field(obj, "t2", "split"), "t2"),
            tree_from_json(_field(obj, "left", "split")),
            tree_from_json(_field(obj, "right", "split")),
            kind=str(obj.get("kind", "")),
            witness=witness,
        )
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def verdict_from_json(obj: Any) -> Verdict:
    try:
        return Verdict.from_tag(_field(obj, "tag", "verdict"))
    except ValueError as exc:
        raise FormatError(f"unknown verdict: {exc}") from None


def load_state_file(path: str, default_params: Params | None = None) -> tuple[State, Params]:
    """Read a state file; ``params`` inside the file win over ``default_params``."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    return parse_state_document(obj, default_params, where=path)


def parse_state_document(obj: Any, default_params: Params | None = None, where: str = "input"):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: top level must be a JSON object")
    try:
        z = state_from_json(obj)
        if "params" in obj:
            params = params_from_json(obj["params"])
        elif default_params is not None:
            params = default_params
        else:
            raise FormatError("missing 'params' (r, s, p)")
    except FormatError as exc:
        raise FormatError(f"{where}: {exc}") from None
    return z, params


def load_points(path: str) -> tuple[list[State], Params | None]:
    """A JSON list of states, or an object ``{"params": ..., "points": [...]}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    params = None
    if isinstance(obj, dict):
        if "params" in obj:
            params = params_from_json(obj["params"])
        obj = _field(obj, "points", path)
    if not isinstance(obj, list) or not obj:
        raise FormatError(f"{path}: expected a non-empty list of states")
    try:
        return [state_from_json(item) for item in obj], params
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# -- CSV cloud --------------------------------------------------------------


def csv_row(z: State, verdict: str, nuclear: float, G: float, ohm: float) -> list[str]:
    return [fmt(x) for x in z.vector()] + [verdict, fmt(nuclear), fmt(G), fmt(ohm)]


def write_cloud_csv(rows: Iterable, out) -> None:
    """Rows carry ``state``, ``verdict``, ``nuclear``, ``G``, ``ohm``; header first."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(csv_row(row.state, row.verdict.tag, row.nuclear, row.G, row.ohm))


def cloud_csv(rows: Iterable) -> str:
    buf = _io.StringIO()
    write_cloud_csv(rows, buf)
    return buf.getvalue()


def read_cloud_csv(text: str) -> list[dict]:
    """Parse a cloud back into dicts with a ``state`` entry and float columns."""
    reader = csv.reader(_io.StringIO(text))
    header = next(reader, None)
    if header != CSV_COLUMNS:
        raise FormatError("cloud CSV header does not match the expected columns")
    out = []
    for row in reader:
        if len(row) != len(CSV_COLUMNS):
            raise FormatError(f"cloud CSV row has {len(row)} cells, expected {len(CSV_COLUMNS)}")
        vals = [float(x) for x in row[:15]]
        out.append({
            "state": State.from_vector(vals),
            "verdict": row[15],
            "nuclear_norm": float(row[16]),
            "G": float(row[17]),
            "ohm_defect": float(row[18]),
        })
    return out
