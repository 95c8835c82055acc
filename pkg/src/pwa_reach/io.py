"""JSON formats for systems and certificates, and the bundled example data."""
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .model import BimodalSystem
from .solve import Certificate

EXAMPLES = ("example1", "example2")


def example_path(name):
    """Path of a bundled data file (``example1``, ``example2``, ``example2_printed``)."""
    name = name if name.endswith(".json") else f"{name}.json"
    return Path(resources.files("pwa_reach") / "data" / name)


def _read_json(source):
    if isinstance(source, dict):
        return source
    path = Path(source)
    if not path.exists() and path.suffix == "" and (path.name in EXAMPLES):
        path = example_path(path.name)
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def system_from_dict(data):
    """Build a system; an optional ``K`` closes the loop (A_i <- A_i - B K')."""
    try:
        missing = [k for k in ("A1", "A2", "B", "c", "f", "Rw") if k not in data]
        if missing:
            raise ParseError(f"system file lacks keys {missing}")
        sys = BimodalSystem(data["A1"], data["A2"], data["B"], data.get("d1"), data.get("d2"),
                            data["c"], data["f"], data["Rw"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ParseError, DimensionMismatch)):
            raise
        raise ParseError(f"malformed system: {exc}") from exc
    if "K" in data:
        sys = sys.closed_loop(data["K"])
    return sys


def load_system(source):
    """Read a system JSON file (or dict, or a bundled example name)."""
    return system_from_dict(_read_json(source))


def system_to_dict(sys):
    return {"A1": sys.A1.tolist(), "A2": sys.A2.tolist(), "B": sys.B.tolist(),
            "d1": sys.d1.tolist(), "d2": sys.d2.tolist(), "c": sys.c.tolist(),
            "f": sys.f, "Rw": sys.Rw.tolist()}


def load_certificate(source):
    return Certificate.from_dict(_read_json(source))


def save_json(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if hasattr(v, "value"):
        return v.value
    raise TypeError(f"cannot serialize {type(v).__name__}")


def save_certificate(cert, path):
    return save_json(cert.to_dict(), path)


def printed_example2():
    """Rounded certificate matrices reported for the two-cart example."""
    data = _read_json(example_path("example2_printed"))
    return {k: (np.array(v, dtype=float) if isinstance(v, list) else v) for k, v in data.items()}
