"""Run manifests: a content digest of the config plus provenance fields."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

__all__ = ["config_digest", "write_manifest"]


def config_digest(config: dict) -> str:
    """sha256 of the canonical JSON form; stable under key reordering."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: dict,
    outputs: list[str],
    seed: int | None = None,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "config_digest": config_digest(config),
        "tool_version": __version__,
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(outputs),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path
