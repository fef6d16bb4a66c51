"""Sub-seed derivation: every random stream descends from one master seed."""
import hashlib

import numpy as np

_MASK_63 = (1 << 63) - 1


def derive_seed(master: int, *tags) -> int:
    """Derive a reproducible sub-seed from a master seed and purpose tags.

    The seed is the first 8 bytes of SHA-256 over "master:tag1:tag2...",
    read big-endian and masked to 63 bits, so any language can reproduce it.
    """
    text = ":".join([str(int(master))] + [str(tag) for tag in tags])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _MASK_63


def make_rng(master: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *tags))
