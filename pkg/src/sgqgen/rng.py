"""Seeded random streams, derived by hashing a stable key.

Every randomized stage draws from a stream named by (seed, *key parts), so
output is independent of scheduling and worker count — no global RNG.
"""

from __future__ import annotations

import hashlib
import random


def stream(seed: int, *key_parts) -> random.Random:
    digest = hashlib.sha256()
    digest.update(str(int(seed)).encode())
    for part in key_parts:
        digest.update(b"\x1f")
        digest.update(str(part).encode("utf-8"))
    return random.Random(int.from_bytes(digest.digest()[:8], "big"))
