# util/derive_seed.py
import hashlib

import numpy as np


def derive_seed(seed: int, *names: object) -> int:
    """
    グローバルシードと名前から独立した派生シードを作る。

    コンポーネントを追加しても他のストリームの乱数列は変わらない。

    Args:
        seed: グローバルシード。
        names: ストリーム名 (例: "split", "init:alpha", 3)。

    Returns:
        64bit 非負整数のシード。
    """
    key = ":".join([str(int(seed))] + [str(n) for n in names])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_rng(seed: int, *names: object) -> np.random.Generator:
    """derive_seed で作ったシードの乱数生成器を返す。"""
    return np.random.default_rng(derive_seed(seed, *names))
