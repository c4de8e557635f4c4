from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping
from shlex import shlex

import numpy as np


def split_csv(value: str) -> list[str]:
    splitter = shlex(value, posix=True)
    splitter.whitespace = ","
    splitter.whitespace_split = True
    return [s.strip() for s in splitter if s.strip()]


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Returns an independent random stream for the task identified by ``key``.

    The stream only depends on ``seed`` and ``key``, so tasks can run in any
    order or in parallel and still draw the same numbers.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def stable_hash(data: Mapping[str, object], length: int = 16) -> str:
    payload = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:length]


def format_float(value: float) -> str:
    if np.isnan(value):
        return "nan"
    return repr(float(value))
