"""
Run manifests.

Every CLI command records what it read, what it wrote and how: the full
configuration, the seed, content digests of its inputs and its output paths.
"""

import hashlib
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from dwellrec.core.logging import get_logger
from dwellrec.domain.entities import RunManifest

logger = get_logger(__name__)

MANIFEST_FILE = "manifest.json"
CHUNK_SIZE = 1 << 20

PathLike = Union[str, Path]


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def input_digests(paths: Iterable[PathLike]) -> Dict[str, str]:
    """
    sha256 of every input file, keyed by path.

    Directories contribute each regular file below them, in sorted order.
    """
    digests: Dict[str, str] = {}
    for path in paths:
        path = Path(path)
        if path.is_dir():
            for child in sorted(p for p in path.rglob("*") if p.is_file()):
                digests[str(child)] = sha256_file(child)
        elif path.is_file():
            digests[str(path)] = sha256_file(path)
    return dict(sorted(digests.items()))


def write_manifest(
    out_dir: PathLike,
    command: str,
    config: dict,
    seed: Optional[int],
    inputs: Iterable[PathLike],
    outputs: List[PathLike],
    wall_clock_seconds: float,
    version: str,
    argv: Optional[List[str]] = None,
) -> Path:
    """Write ``manifest.json`` into out_dir and return its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        input_digests=input_digests(inputs),
        output_paths=[str(p) for p in outputs],
        wall_clock_seconds=wall_clock_seconds,
        version=version,
        argv=list(argv or []),
    )
    path = out / MANIFEST_FILE
    path.write_text(json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {path} ({len(manifest.input_digests)} inputs, {len(outputs)} outputs)")
    return path
