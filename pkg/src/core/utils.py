"""Utility functions for the Posterior Fusion Toolkit."""

import zlib
from typing import List, Union

import numpy as np

from .exceptions import UsageError


def derive_rng(seed: int, *keys: Union[int, str]) -> np.random.Generator:
    """Build an independent generator for ``keys`` under a master seed.

    String keys are hashed with crc32 so the stream does not depend on
    Python's per-process hash randomization.
    """
    spawn_key = tuple(
        zlib.crc32(k.encode("utf-8")) if isinstance(k, str) else int(k)
        for k in keys
    )
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


def argmax_rows(matrix: np.ndarray) -> np.ndarray:
    """Per-row argmax; ties resolve to the lowest index."""
    return np.argmax(matrix, axis=1)


def topn_indices(matrix: np.ndarray, n: int) -> np.ndarray:
    """Indices of the ``n`` largest entries per row, ties to the lowest index."""
    order = np.argsort(-matrix, axis=1, kind="stable")
    return order[:, :n]


def parse_int_list(text: str) -> List[int]:
    """Parse ``"1,2,5"`` into ``[1, 2, 5]``."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Expected comma-separated integers, got '{text}'", code="bad-flag")


def parse_float_list(text: str) -> List[float]:
    """Parse ``"0.5,0.25,0.25"`` into floats."""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Expected comma-separated numbers, got '{text}'", code="bad-flag")


def format_metric(value: float) -> str:
    """Fixed 6-decimal rendering used in reports and tables."""
    return f"{value:.6f}"


def truncate_string(text: str, max_length: int, suffix: str = "...") -> str:
    """Truncate string to maximum length."""
    if len(text) <= max_length:
        return text
    return text[:max_length - len(suffix)] + suffix
