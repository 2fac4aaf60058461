"""Run manifests: enough provenance to reproduce any output byte-for-byte."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Inputs and parameters of one run; accompanies every output artifact."""

    command: str
    input_digests: dict[str, str]
    window: tuple[str, str]
    production: str
    cd_exponent: float
    tolerance: float
    max_iter: int | None
    seed: int | None
    parameters: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "input_digests": self.input_digests,
            "window": {"start": self.window[0], "end": self.window[1]},
            "production": self.production,
            "cd_exponent": self.cd_exponent,
            "tolerance": self.tolerance,
            "max_iter": self.max_iter,
            "seed": self.seed,
            "parameters": self.parameters,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / "manifest.json"
        path.write_text(self.to_json(), encoding="utf-8")
        return path
