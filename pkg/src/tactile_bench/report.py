"""Analysis report bundles.

Every CLI command writes a ``report.json`` that snapshots the tool version,
the full analysis configuration (enough to re-run bit-identically), input
provenance, and the results.  Reports are deterministic: reruns on the same
inputs produce byte-identical files, so no wall-clock values are embedded —
``provenance.timestamp`` echoes the input manifest's optional
``recorded_utc`` field and is null otherwise.

Non-finite numbers are serialized as the strings "inf"/"-inf" and NaN as
null (JSON has no native spelling for them); the shipped schema file
(schemas/report.schema.json) admits exactly that encoding.
"""

from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

from . import __version__

REPORT_SCHEMA_VERSION = 1
TOOL_NAME = "tactile-bench"


def jsonable(value: Any) -> Any:
    """Recursively convert a result tree into strict-JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, str)) or value is None:
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(value, "item"):  # numpy scalar
        return jsonable(value.item())
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


def canonical_json(doc: Any) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, separators=(",", ":"))


def config_hash(command: str, config: dict[str, Any]) -> str:
    payload = canonical_json({"command": command, "config": config, "tool_version": __version__})
    return "sha256:" + hashlib.sha256(payload.encode()).hexdigest()


def file_digest(path: str | Path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_report(
    command: str,
    material_label: str,
    sample_id: str,
    protocol_kind: str,
    protocol_params: dict[str, Any],
    config: dict[str, Any],
    results: dict[str, Any],
    input_path: str,
    input_digest: str,
    seed: int | None,
    timestamp: str | None,
) -> dict[str, Any]:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": TOOL_NAME, "version": __version__},
        "command": command,
        "material_label": material_label,
        "sample_id": sample_id,
        "protocol": {"kind": protocol_kind, "parameters": jsonable(protocol_params)},
        "config": jsonable(config),
        "config_hash": config_hash(command, config),
        "provenance": {
            "input": input_path,
            "input_digest": input_digest,
            "seed": seed,
            "timestamp": timestamp,
        },
        "results": jsonable(results),
    }


def write_report(report: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n")


def report_schema() -> dict[str, Any]:
    """The published report schema shipped with the package."""
    with resources.files("tactile_bench").joinpath("schemas/report.schema.json").open() as fh:
        return json.load(fh)
