"""On-disk artifact handling: canonical JSON, schema tags, run manifests.

Every artifact is a JSON object carrying a "schema" tag like "trace@1";
loading an artifact with the wrong tag is a hard error. Canonical
serialization (sorted keys, fixed indentation, trailing newline) makes
identical data byte-identical on disk.
"""

from __future__ import annotations

import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .errors import ArtifactError

TOOL_VERSION = "0.1.0"

SCHEMAS = {
    "store": "store@1",
    "trace": "trace@1",
    "net": "net@1",
    "clusters": "clusters@1",
    "sva": "sva@1",
    "overlay": "overlay@1",
    "bursts": "bursts@1",
    "manifest": "manifest@1",
}


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_artifact(path: str | Path, obj: dict) -> None:
    if "schema" not in obj:
        raise ArtifactError("artifact object lacks a schema tag")
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def load_artifact(path: str | Path, expected_schema: str) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: not valid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ArtifactError(f"{path}: artifact must be a JSON object")
    schema = doc.get("schema")
    if schema != expected_schema:
        raise ArtifactError(
            f"{path}: schema mismatch: expected {expected_schema!r}, found {schema!r}"
        )
    return doc


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    path: str | Path,
    command: list[str],
    config: dict,
    inputs: list[str | Path],
    outputs: list[str | Path],
) -> None:
    """Record a run: command line, config snapshot, input digests, outputs."""
    manifest = {
        "schema": SCHEMAS["manifest"],
        "command": list(command),
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs if Path(p).exists()},
        "outputs": {str(p): sha256_file(p) for p in outputs if Path(p).exists()},
        "created": datetime.now(timezone.utc).isoformat(),
        "tool_version": TOOL_VERSION,
        "python": sys.version.split()[0],
    }
    save_artifact(path, manifest)
