"""CSV tables, JSON reports and checksummed result bundles."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .dde import Trajectory
from .experiments import SweepTable
from .model import COMPARTMENTS

__all__ = ["ManifestEntry", "ResultBundle", "read_csv", "table_arrays", "write_csv",
           "write_json"]

UNITS = {
    "t": "day", "T": "degC", "beta": "1/day", "R0": "1", "p": "1", "tau": "day",
    "kappa": "day", "amplitude": "fraction", "I_min": "fraction", "I_max": "fraction",
}
UNITS.update({c: "fraction" for c in COMPARTMENTS})
UNITS.update({f"avg_{c}": "fraction" for c in COMPARTMENTS})


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    sha256: str
    size: int
    kind: str


def _entry(path: str, kind: str) -> ManifestEntry:
    with open(path, "rb") as fh:
        blob = fh.read()
    return ManifestEntry(path, hashlib.sha256(blob).hexdigest(), len(blob), kind)


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.12g" % x


def table_arrays(obj) -> tuple[tuple[str, ...], np.ndarray, tuple[str, ...]]:
    """Columns, data and row flags of a SweepTable or a Trajectory."""
    if isinstance(obj, Trajectory):
        cols = ("t",) + COMPARTMENTS[: obj.states.shape[1]]
        data = np.column_stack([obj.times, obj.states])
        return cols, data, ("",) * len(data)
    if isinstance(obj, SweepTable):
        return obj.columns, obj.data, obj.flags
    raise TypeError(f"cannot tabulate {type(obj).__name__}")


def write_csv(obj, path: str, units: dict[str, str] | None = None) -> ManifestEntry:
    """Write a table or trajectory as CSV.

    A ``# units:`` comment precedes the column header; flagged rows are listed
    in trailing ``# flag`` comments so the data block keeps a fixed schema.
    """
    cols, data, flags = table_arrays(obj)
    units = {**UNITS, **(units or {})}
    lines = ["# units: " + ",".join(units.get(c, "") for c in cols), ",".join(cols)]
    lines.extend(",".join(_fmt(x) for x in row) for row in data.tolist())
    lines.extend(f"# flag row {k}: {f}" for k, f in enumerate(flags) if f)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return _entry(path, "csv")


def read_csv(path: str) -> tuple[tuple[str, ...], np.ndarray, dict[str, str]]:
    """Inverse of :func:`write_csv`: ``(columns, data, units)``."""
    header = None
    unit_list: list[str] = []
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# units:"):
                    unit_list = line[len("# units:"):].strip().split(",")
                continue
            if header is None:
                header = tuple(line.split(","))
                continue
            rows.append([float(x) for x in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    units = dict(zip(header, unit_list))
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data, units


def _jsonable(x: Any):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    if hasattr(x, "_asdict"):
        return _jsonable(x._asdict())
    return repr(x)


def write_json(obj, path: str) -> ManifestEntry:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return _entry(path, "json")


class ResultBundle:
    """Collects the files of one run and writes ``manifest.json`` listing each
    with its SHA-256, plus a provenance block (resolved config, version,
    timestamps)."""

    def __init__(self, out_dir: str, command: str, config_text: str = ""):
        from . import __version__

        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.entries: list[ManifestEntry] = []
        self.provenance = {
            "command": command,
            "config": config_text,
            "version": __version__,
            "started": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _add(self, entry: ManifestEntry) -> ManifestEntry:
        self.entries.append(entry)
        return entry

    def add_csv(self, name: str, obj, units=None) -> ManifestEntry:
        return self._add(write_csv(obj, self.path(name), units))

    def add_json(self, name: str, obj) -> ManifestEntry:
        return self._add(write_json(obj, self.path(name)))

    def add_svg(self, name: str, series: Sequence, **kw) -> ManifestEntry:
        from .svg import plot_svg

        return self._add(plot_svg(series, self.path(name), **kw))

    def add_text(self, name: str, text: str) -> ManifestEntry:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return self._add(_entry(self.path(name), "text"))

    def finalize(self) -> str:
        prov = dict(self.provenance,
                    finished=_dt.datetime.now(_dt.timezone.utc).isoformat())
        files = [{"path": os.path.relpath(e.path, self.out_dir), "sha256": e.sha256,
                  "bytes": e.size, "kind": e.kind} for e in self.entries]
        path = self.path("manifest.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"provenance": prov, "files": files}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
