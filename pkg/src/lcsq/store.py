"""Persistent JSON cache of computed tables.

One file per computation, named by a SHA-256 of the canonical key.  Layout::

    {
      "schema": 1,
      "key": {"ring": "Z", "k": 2, "relations": ["x1^3", "x2^7"],
              "i": 2, "bound": 10, "max_dim": 4096, "version": "1"},
      "wall_time": 0.71,
      "peak_memory_mb": 88.2,
      "table": {"k": 2, "bound": 10, "ring": "Z", "i": 2,
                "cells": [[[0, 0], 0, []], [[3, 1], 0, [3]], ...]}
    }

A cell entry is ``[degree, rank, invariant factors]`` over Z and
``[degree, dimension]`` over F_p.  Writes go to a temporary file in the same
directory followed by an atomic rename, so concurrent writers never leave a
half-written file behind.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

from .exact_linalg import GroupInvariants
from .lcs_engine import DEFAULT_MAX_DIM, ENGINE_VERSION, AlgebraPresentation, BigradedTable, Ring

log = logging.getLogger(__name__)

SCHEMA = 1
ENV_VAR = "LCSQ_CACHE_DIR"


@dataclass(frozen=True)
class ComputationKey:
    ring: str
    k: int
    relations: tuple[str, ...]
    i: int
    bound: int
    max_dim: int | None = DEFAULT_MAX_DIM
    version: str = ENGINE_VERSION

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(sorted(self.relations)))

    @classmethod
    def for_run(cls, pres: AlgebraPresentation, i: int, bound: int, max_dim: int | None = DEFAULT_MAX_DIM):
        return cls(str(pres.ring), pres.k, tuple(pres.relation_strings()), i, bound, max_dim)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["relations"] = list(self.relations)
        return d

    def digest(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:32]


@dataclass
class CacheRecord:
    key: ComputationKey
    table: BigradedTable
    wall_time: float = 0.0
    peak_memory_mb: float = 0.0


def table_to_json(table: BigradedTable) -> dict:
    cells = []
    for d in sorted(table.cells):
        c = table.cells[d]
        if isinstance(c, GroupInvariants):
            cells.append([list(d), c.rank, list(c.factors)])
        else:
            cells.append([list(d), int(c)])
    return {"k": table.k, "bound": table.bound, "ring": str(table.ring), "i": table.i, "cells": cells}


def table_from_json(doc: dict, presentation: AlgebraPresentation | None = None) -> BigradedTable:
    ring = Ring.parse(doc["ring"])
    cells = {}
    for entry in doc["cells"]:
        d = tuple(entry[0])
        if ring.is_integral:
            cells[d] = GroupInvariants(entry[1], tuple(entry[2]))
        else:
            cells[d] = int(entry[1])
    return BigradedTable(doc["k"], doc["bound"], cells, ring, doc["i"], presentation)


def cache_dir_from(flag: str | None) -> Path | None:
    """Directory from the flag, else the environment; None disables caching."""
    value = flag or os.environ.get(ENV_VAR)
    return Path(value) if value else None


class ResultStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def path_for(self, key: ComputationKey) -> Path:
        return self.root / f"{key.digest()}.json"

    def get(self, key: ComputationKey, presentation: AlgebraPresentation | None = None) -> CacheRecord | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text())
            stored = doc["key"]
            stored["relations"] = tuple(stored["relations"])
            stored_key = ComputationKey(**stored)
            table = table_from_json(doc["table"], presentation)
            wall, mem = float(doc["wall_time"]), float(doc["peak_memory_mb"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            log.warning("ignoring unreadable cache file %s: %s", path, exc)
            return None
        if doc.get("schema") != SCHEMA or stored_key != key:
            # stale engine version or a digest collision: recompute
            return None
        return CacheRecord(stored_key, table, wall, mem)

    def put(self, record: CacheRecord) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {
            "schema": SCHEMA,
            "key": record.key.as_dict(),
            "wall_time": record.wall_time,
            "peak_memory_mb": record.peak_memory_mb,
            "table": table_to_json(record.table),
        }
        path = self.path_for(record.key)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh, indent=1)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path


def cache_get(root, key: ComputationKey, presentation: AlgebraPresentation | None = None) -> CacheRecord | None:
    return ResultStore(root).get(key, presentation)


def cache_put(root, key: ComputationKey, record: CacheRecord) -> Path:
    if record.key != key:
        raise ValueError("record key does not match the key it is stored under")
    return ResultStore(root).put(record)
