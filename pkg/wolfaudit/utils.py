import hashlib
import os
import sys
import tempfile
from functools import wraps
from pathlib import Path

import orjson
from loguru import logger

logger.remove()
logger.add(
    sys.stderr,
    level=os.environ.get("AUDIT_LOG_LEVEL", "INFO"),
    backtrace=True,
    diagnose=True,
)
if os.environ.get("LOG_TO_FILE"):
    logger.add("wolfaudit.log", backtrace=True, diagnose=True, rotation="1 MB")


AUDIT_LLM_BASE_URL = os.environ.get("AUDIT_LLM_BASE_URL", "")
AUDIT_LLM_API_KEY = os.environ.get("AUDIT_LLM_API_KEY", "")
AUDIT_LLM_MODEL = os.environ.get("AUDIT_LLM_MODEL", "")
AUDIT_LLM_RATE = float(os.environ.get("AUDIT_LLM_RATE", 2))
AUDIT_LLM_TIMEOUT = float(os.environ.get("AUDIT_LLM_TIMEOUT", 90))
AUDIT_CACHE_DIR = os.environ.get("AUDIT_CACHE_DIR", "cache")
AUDIT_WORKERS = int(os.environ.get("AUDIT_WORKERS", os.cpu_count() or 1))

ROUND_CAP = 10
TRUTH_THRESHOLD = 6
SCORE_MIN, SCORE_MAX = 0, 10
NEUTRAL_SCORE = 5


class AuditException(Exception):
    def __init__(self, msg, ref, res=None):
        self.msg = msg
        self.ref = ref
        self.res = str(res) if res else None

    def __str__(self):
        return f"{self.msg}: {self.ref} ->\n{self.res}"


class ConfigurationError(AuditException):
    pass


class IllegalActionError(AuditException):
    pass


class ConsistencyError(AuditException):
    pass


class ReplyParseError(AuditException):
    pass


class ReplyValidationError(AuditException):
    pass


class GatewayConfigError(AuditException):
    pass


class GatewayError(AuditException):
    pass


class ReplayError(AuditException):
    pass


class CacheIntegrityError(AuditException):
    pass


class TranscriptError(AuditException):
    pass


class IntegrityError(AuditException):
    pass


def retry_catcher(func):
    @wraps(func)
    async def inner_function(*args, **kwargs):
        try:
            return await func(*args, **kwargs)
        except AuditException as err:
            logger.error(err)
            return err
        except Exception as err:
            logger.exception(err)
            return err

    return inner_function


def dumps(obj) -> bytes:
    return orjson.dumps(obj, option=orjson.OPT_SORT_KEYS)


def sha256_hex(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def derive_seed(*parts) -> int:
    """64-bit seed from any printable parts, stable across processes."""
    digest = sha256_hex(":".join(str(p) for p in parts))
    return int(digest[:16], 16)


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as file:
            file.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
