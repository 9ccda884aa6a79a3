"""Content-addressed result cache with checksummed, atomically written entries."""
from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .. import __version__
from ..errors import CacheCorrupt

CACHE_ENV = "STOKES_SHRINK_CACHE"
MANIFEST = "manifest.json"


def cache_dir() -> Path:
    root = os.environ.get(CACHE_ENV)
    return Path(root) if root else Path.home() / ".cache" / "stokes_shrink"


def experiment_id(canonical_config: str, command: str) -> str:
    h = hashlib.sha256()
    for part in (command, canonical_config, __version__):
        h.update(part.encode())
        h.update(b"\0")
    return h.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class ResultRecord:
    """One executed command.  ``payloads`` maps file names to paths."""

    id: str
    command: str
    payloads: dict
    wall_time: float
    summary: dict
    checksums: dict = field(default_factory=dict)
    cached: bool = False

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("pass", False))


def store(record: ResultRecord, files: dict, root: Path | None = None) -> ResultRecord:
    """Write payload bytes and a manifest under root/<id>, replacing the directory atomically."""
    root = cache_dir() if root is None else Path(root)
    root.mkdir(parents=True, exist_ok=True)
    final = root / record.id
    tmp = Path(tempfile.mkdtemp(prefix=f".{record.id[:12]}-", dir=root))
    try:
        sums = {}
        for name, data in files.items():
            (tmp / name).write_bytes(data)
            sums[name] = sha256_bytes(data)
        meta = asdict(record)
        meta.update(checksums=sums, payloads=sorted(files), cached=False)
        (tmp / MANIFEST).write_text(json.dumps(meta, sort_keys=True, indent=1))
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return ResultRecord(record.id, record.command, {n: str(final / n) for n in files},
                        record.wall_time, record.summary, sums, False)


def _quarantine(root: Path, entry: Path) -> Path:
    qdir = root / "quarantine"
    qdir.mkdir(exist_ok=True)
    k = 0
    while (qdir / f"{entry.name}.{k}").exists():
        k += 1
    target = qdir / f"{entry.name}.{k}"
    os.replace(entry, target)
    return target


def cache_lookup(rid: str, root: Path | None = None) -> ResultRecord | None:
    """Return the stored record if present; raise CacheCorrupt (after quarantining) on tampering."""
    root = cache_dir() if root is None else Path(root)
    entry = root / rid
    if not (entry / MANIFEST).is_file():
        return None
    try:
        meta = json.loads((entry / MANIFEST).read_text())
        sums = meta["checksums"]
        for name, digest in sums.items():
            if sha256_bytes((entry / name).read_bytes()) != digest:
                raise ValueError(f"checksum mismatch for {name}")
    except (OSError, ValueError, KeyError) as exc:
        where = _quarantine(root, entry)
        raise CacheCorrupt(f"cache entry {rid[:12]} corrupt ({exc}); moved to {where}") from None
    return ResultRecord(meta["id"], meta["command"], {n: str(entry / n) for n in sums},
                        meta["wall_time"], meta["summary"], sums, True)
