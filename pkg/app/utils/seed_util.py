import hashlib

import numpy as np


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    """Stable 64-bit mix of (master seed, stream tag, index)."""
    payload = f"{int(master_seed) & 0xFFFFFFFFFFFFFFFF}:{tag}:{int(index)}".encode('utf-8')
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, 'little')


def stream(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, tag, index))
