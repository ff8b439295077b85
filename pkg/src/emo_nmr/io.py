"""Schema-versioned CSV/JSON emission and ingestion.

Every CSV starts with two comment lines::

    # emo-nmr <kind>/v1
    # manifest {"command": ..., ...}

followed by a normal header row.  Readers refuse files whose kind or version
they do not understand.  Floats are written with ``repr`` so output is
byte-identical for identical inputs.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import numbers
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

SCHEMA_VERSION = 1
_MAGIC = "# emo-nmr "

CSV_COLUMNS = {
    "spectrum": ("frequency_Hz", "real", "imag", "magnitude", "phase_rad"),
    "waveform": ("t_s", "re", "im"),
    "sweep": ("axis_value", "metric", "value"),
    "calibration": ("power_dbm", "value", "sigma"),
}


class SchemaError(ValueError):
    """File header missing, of the wrong kind, or of an unknown version."""


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str | None = None
    overrides: tuple[str, ...] = ()
    output_dir: str | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["overrides"] = list(self.overrides)
        d["schema_version"] = SCHEMA_VERSION
        return d


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return repr(float(value))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, numbers.Integral):
        return int(obj)
    try:
        x = float(obj)
    except (TypeError, ValueError):
        return str(obj)
    return x if math.isfinite(x) else repr(x)


def dumps_json(obj, manifest: RunManifest | None = None) -> str:
    payload = dict(_jsonable(obj))
    if manifest is not None:
        payload["manifest"] = manifest.to_dict()
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_json(path, obj, manifest: RunManifest | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj, manifest), encoding="utf-8")
    return path


def format_csv(kind: str, rows: Iterable[Sequence], manifest: RunManifest | None = None) -> str:
    if kind not in CSV_COLUMNS:
        raise SchemaError(f"unknown CSV kind {kind!r}")
    buf = _io.StringIO()
    buf.write(f"{_MAGIC}{kind}/v{SCHEMA_VERSION}\n")
    man = manifest.to_dict() if manifest is not None else {}
    buf.write("# manifest " + json.dumps(_jsonable(man), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS[kind])
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, kind: str, rows: Iterable[Sequence], manifest: RunManifest | None = None) -> Path:
    path = Path(path)
    path.write_text(format_csv(kind, rows, manifest), encoding="utf-8")
    return path


def parse_csv(text: str, kind: str):
    """Return ``(rows, manifest_dict)``; string columns stay strings, the rest float."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_MAGIC):
        raise SchemaError("missing emo-nmr schema header")
    tag = lines[0][len(_MAGIC):].strip()
    try:
        got_kind, version = tag.rsplit("/v", 1)
        version = int(version)
    except ValueError:
        raise SchemaError(f"malformed schema tag {tag!r}") from None
    if got_kind != kind:
        raise SchemaError(f"expected a {kind!r} file, got {got_kind!r}")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported {kind} schema version {version} (this build reads v{SCHEMA_VERSION})")
    manifest = {}
    body_start = 1
    if len(lines) > 1 and lines[1].startswith("# manifest "):
        manifest = json.loads(lines[1][len("# manifest "):])
        body_start = 2
    reader = csv.reader(lines[body_start:])
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS[kind]:
        raise SchemaError(f"expected columns {CSV_COLUMNS[kind]}, got {header}")
    rows = []
    for lineno, row in enumerate(reader, start=body_start + 2):
        if not row:
            continue
        if len(row) != len(header):
            raise SchemaError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        parsed = []
        for name, cell in zip(header, row):
            if name == "metric":
                parsed.append(cell)
            else:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise SchemaError(f"line {lineno}: {name}: not a number: {cell!r}") from None
        rows.append(parsed)
    return rows, manifest


def read_csv(path, kind: str):
    return parse_csv(Path(path).read_text(encoding="utf-8"), kind)
