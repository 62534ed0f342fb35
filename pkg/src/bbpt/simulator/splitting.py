"""Splitting one message into independently cut send and receive parts."""

from typing import List, Tuple

import numpy as np

from ..errors import SplitError


def _partition(total: int, parts: int, rng: np.random.Generator) -> List[int]:
    if parts == 1:
        return [total]
    cuts = np.sort(rng.choice(total - 1, size=parts - 1, replace=False) + 1)
    bounds = np.concatenate(([0], cuts, [total]))
    return [int(size) for size in np.diff(bounds)]


def split_message(
    send_size: int,
    send_parts: int,
    receive_parts: int,
    rng: np.random.Generator,
) -> Tuple[List[int], List[int]]:
    """Cut ``send_size`` bytes into send parts and, independently, receive parts.

    Both lists sum to ``send_size`` and every part is at least one byte.
    """
    if send_size <= 0:
        raise SplitError(f"message size must be positive, got {send_size}")
    for parts in (send_parts, receive_parts):
        if parts < 1:
            raise SplitError(f"part count must be at least 1, got {parts}")
        if parts > send_size:
            raise SplitError(f"cannot split {send_size} bytes into {parts} non-empty parts")
    return _partition(send_size, send_parts, rng), _partition(send_size, receive_parts, rng)
