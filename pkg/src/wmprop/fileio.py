"""On-disk formats: pivotal samples, token streams, and verifier keys.

Pivotal samples are plain text, one decimal float per line under a
single ``y`` header, written with positional (never scientific)
notation so files are diffable and locale-proof.  Token streams are
JSON lines, one object per stream with ``tokens`` and optionally
``wm_flags`` / ``true_eps``.  Keys are 32 bytes stored as 64 lowercase
hex characters on one line.  Loaders validate aggressively and raise
ParseError carrying the 1-based line number.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyDataset, ParseError
from .rng import make_rng
from .simulate import TokenStream

_S_KEY = 11
_HEADER = "y"


def write_pivots(path, values) -> None:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DomainError("pivotal values must be a 1-d array")
    if v.size and (not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0):
        raise DomainError("pivotal values must lie in [0, 1]")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_HEADER + "\n")
        for y in v:
            fh.write(np.format_float_positional(y, unique=True, trim="0") + "\n")


def read_pivots(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file: expected a 'y' header line", line=1)
    if lines[0].strip() != _HEADER:
        raise ParseError(f"expected header 'y', got {lines[0]!r}", line=1)
    out = []
    for i, raw in enumerate(lines[1:], start=2):
        s = raw.strip()
        if not s:
            continue
        try:
            y = float(s)
        except ValueError:
            raise ParseError(f"not a number: {s!r}", line=i) from None
        if not (0.0 <= y <= 1.0) or y != y:
            raise ParseError(f"value out of [0, 1]: {s}", line=i)
        out.append(y)
    if not out:
        raise EmptyDataset("pivotal sample file contains a header but no values")
    return np.asarray(out, dtype=np.float64)


@dataclass(frozen=True)
class StreamRecord:
    """One deserialized token stream; flags and true_eps may be absent."""

    tokens: np.ndarray
    wm_flags: np.ndarray | None = None
    true_eps: float | None = None


def write_streams(path, records) -> None:
    """Serialize TokenStream or StreamRecord values, one JSON object per line."""
    with open(path, "w", encoding="ascii") as fh:
        for rec in records:
            if isinstance(rec, TokenStream):
                rec = StreamRecord(rec.tokens, rec.wm_flags)
            obj: dict = {"tokens": [int(t) for t in rec.tokens]}
            if rec.wm_flags is not None:
                obj["wm_flags"] = [bool(f) for f in rec.wm_flags]
            if rec.true_eps is not None:
                obj["true_eps"] = float(rec.true_eps)
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_streams(path) -> list[StreamRecord]:
    records = []
    with open(path, "r", encoding="ascii") as fh:
        for i, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s:
                continue
            try:
                obj = json.loads(s)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=i) from None
            if not isinstance(obj, dict) or "tokens" not in obj:
                raise ParseError("expected an object with a 'tokens' field", line=i)
            toks = obj["tokens"]
            if (not isinstance(toks, list) or not toks
                    or any(not isinstance(t, int) or isinstance(t, bool) or t < 0
                           for t in toks)):
                raise ParseError("'tokens' must be a non-empty list of "
                                 "non-negative integers", line=i)
            tokens = np.asarray(toks, dtype=np.int64)
            flags = None
            if "wm_flags" in obj:
                fl = obj["wm_flags"]
                if (not isinstance(fl, list) or len(fl) != len(toks)
                        or any(not isinstance(f, bool) for f in fl)):
                    raise ParseError("'wm_flags' must be a list of booleans "
                                     "matching 'tokens' in length", line=i)
                flags = np.asarray(fl, dtype=bool)
            true_eps = None
            if "true_eps" in obj:
                te = obj["true_eps"]
                if not isinstance(te, (int, float)) or isinstance(te, bool) \
                        or not (0.0 <= te <= 1.0):
                    raise ParseError("'true_eps' must be a number in [0, 1]",
                                     line=i)
                true_eps = float(te)
            records.append(StreamRecord(tokens, flags, true_eps))
    if not records:
        raise EmptyDataset("stream file contains no records")
    return records


def generate_key(seed: int | None = None) -> bytes:
    """32 random key bytes; seeded generation is for reproducible tests."""
    if seed is None:
        return secrets.token_bytes(32)
    return make_rng(seed, _S_KEY).bytes(32)


def save_key(path, key: bytes) -> None:
    if not isinstance(key, bytes) or len(key) != 32:
        raise DomainError("key must be exactly 32 bytes")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(key.hex() + "\n")


def load_key(path) -> bytes:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    stripped = [ln.strip() for ln in lines if ln.strip()]
    if len(stripped) != 1:
        raise ParseError("key file must contain exactly one line", line=1)
    s = stripped[0]
    if len(s) != 64 or any(c not in "0123456789abcdefABCDEF" for c in s):
        raise ParseError("key must be 64 hex characters", line=1)
    return bytes.fromhex(s)
