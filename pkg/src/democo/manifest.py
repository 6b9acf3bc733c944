"""Run manifests: enough provenance to reproduce any command's outputs."""

from __future__ import annotations

import datetime
import hashlib
import json
from pathlib import Path

from . import __version__


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(
    *,
    command: str,
    argv: list[str],
    seed: int,
    config: dict[str, str],
    inputs: dict[str, str] | None = None,
    models: dict[str, str] | None = None,
    outputs: dict[str, str] | None = None,
    extra: dict | None = None,
) -> dict:
    manifest = {
        "tool": "democo",
        "tool_version": __version__,
        "command": command,
        "argv": argv,
        "seed": seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": dict(sorted(config.items())),
        "inputs": inputs or {},
        "models": models or {},
        "outputs": outputs or {},
    }
    if extra:
        manifest.update(extra)
    return manifest


def hash_files(paths) -> dict[str, str]:
    return {str(p): sha256_file(p) for p in paths}


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
