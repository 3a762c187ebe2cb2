import time
from enum import StrEnum
from pathlib import Path

import orjson

from ..utils import (
    AUDIT_CACHE_DIR,
    CacheIntegrityError,
    ReplayError,
    atomic_write,
    dumps,
    logger,
    sha256_hex,
)


class CacheMode(StrEnum):
    RW = "rw"
    RO = "ro"
    OFF = "off"


def request_digest(request: dict) -> str:
    return sha256_hex(dumps(request))


class ResponseCache:
    """Content-addressed store: ``<root>/<first 2 hex>/<digest>.json``.

    Each record holds ``{request, response, timestamp}``; the digest is
    recomputed from the stored request on every read.
    """

    def __init__(self, root: str | Path = AUDIT_CACHE_DIR, mode: CacheMode = CacheMode.RW):
        self.root = Path(root)
        self.mode = CacheMode(mode)

    @property
    def enabled(self) -> bool:
        return self.mode is not CacheMode.OFF

    def path_for(self, digest: str) -> Path:
        return self.root / digest[:2] / f"{digest}.json"

    def get(self, digest: str) -> str | None:
        path = self.path_for(digest)
        if not self.enabled or not path.exists():
            return None
        record = self._load(path)
        logger.debug(f"拉取回复缓存: {digest}")
        return record["response"]

    def set(self, digest: str, request: dict, response: str) -> None:
        if self.mode is CacheMode.RO:
            raise ReplayError("只读缓存未命中", digest)
        if not self.enabled:
            return
        if request_digest(request) != digest:
            raise CacheIntegrityError("缓存键与请求不符", digest)
        record = {"request": request, "response": response, "timestamp": time.time()}
        atomic_write(self.path_for(digest), dumps(record))

    def _load(self, path: Path) -> dict:
        try:
            record = orjson.loads(path.read_bytes())
            digest = request_digest(record["request"])
            record["response"]
        except (orjson.JSONDecodeError, KeyError, TypeError) as e:
            raise CacheIntegrityError("缓存记录损坏", path, e)
        if path.stem != digest:
            raise CacheIntegrityError("缓存摘要不一致", path, digest)
        return record

    def validate(self) -> list[tuple[Path, str]]:
        """Every corrupt record under root, as (path, reason)."""
        problems = []
        for path in sorted(self.root.glob("*/*.json")):
            try:
                self._load(path)
                if path.parent.name != path.stem[:2]:
                    raise CacheIntegrityError("缓存目录错误", path)
            except CacheIntegrityError as err:
                problems.append((path, err.msg))
        return problems
