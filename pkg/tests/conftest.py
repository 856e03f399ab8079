"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from src.models.inventory import ClassInventory
from src.models.posteriorgram import Posteriorgram


def random_rows(rng: np.random.Generator, n: int, d: int, concentration: float = 1.0) -> np.ndarray:
    """``n`` random distributions over ``d`` classes."""
    return rng.dirichlet(np.full(d, concentration), size=n)


def peaked_rows(rng: np.random.Generator, classes: np.ndarray, d: int, peak: float = 5.0,
                jitter: float = 0.5) -> np.ndarray:
    """Softmax rows concentrated on ``classes``."""
    logits = rng.normal(0.0, jitter, size=(len(classes), d))
    logits[np.arange(len(classes)), classes] += peak
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def make_pg(rows, utt: str = "utt1", lang: str = "tam") -> Posteriorgram:
    return Posteriorgram(utterance_id=utt, language_id=lang, frames=np.asarray(rows))


def make_inventory(lang: str, size: int, phones=None) -> ClassInventory:
    """Class 0 is silence; the others map to ``ph1``, ``ph2``, ... unless ``phones`` is given."""
    if phones is None:
        phones = ["sil"] + [f"ph{i}" for i in range(1, size)]
    return ClassInventory(language_id=lang, size=size, phone_of_class=tuple(phones), silence_phone="sil")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
