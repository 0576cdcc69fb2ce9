"""Keyed counter-based random streams.

Every stochastic object in the package draws from a Philox generator keyed by
(object-family id, structural integers, seed). Streams are therefore pure
functions of their key: replications reproduce bit-for-bit regardless of
execution order, thread count, or which other objects were drawn first.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode("utf-8")).digest()[:8], "little")
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    if isinstance(part, (float, np.floating)):
        # exact IEEE bits, so 0.1 and 0.1000001 key different streams
        return struct.unpack("<Q", struct.pack("<d", float(part)))[0]
    raise TypeError(f"unsupported stream key part: {part!r}")


def stream(family: str, *parts) -> np.random.Generator:
    """A fresh Generator keyed by (family, *parts)."""
    entropy = [_key_part(family)] + [_key_part(p) for p in parts]
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(entropy=entropy)))
