"""Counter-based seed derivation.

Every random stream in a run is keyed by ``(master_seed, *labels)`` so the
numbers a task sees do not depend on which thread runs it or in what order.
"""

import hashlib

import numpy as np


def derive_seed(master_seed, *labels):
    """64-bit seed from a master seed and structured labels (ints or strings)."""
    h = hashlib.blake2b(digest_size=8, person=b"qpdrive-seed")
    h.update(str(int(master_seed)).encode())
    for lab in labels:
        # type tag keeps 1 and "1" apart
        tag = b"i" if isinstance(lab, (int, np.integer)) else b"s"
        h.update(b"\x1f" + tag + str(lab).encode())
    return int.from_bytes(h.digest(), "little")


def rng_for(master_seed, *labels):
    return np.random.default_rng(derive_seed(master_seed, *labels))
