"""Labeled 20-symbol groups for training one hypothesis network.

Positive records come from signals whose packing ratio equals the hypothesis
``alpha_k`` and start on a symbol peak. Negative records come from signals
at another ratio from the pool, read at the hypothesis interval from a
random phase.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import FtnLink, derive_seed, PulseSpec, downsample, grid_interval, receive, srrc_taps
from .errors import FormatError, ParameterError

GROUP_LEN = 20
GUARD_SYMBOLS = 64
GROUPS_PER_WAVE = 512

RECORD_DTYPE = np.dtype([("features", "<f8", (GROUP_LEN,)), ("label", "u1")])


@dataclass(frozen=True)
class DatasetHeader:
    alpha_k: float
    alpha_pool: tuple[float, ...]
    I: int
    roll_off: float
    ebn0_db: float
    count: int
    seed: int


@dataclass
class Dataset:
    header: DatasetHeader
    features: np.ndarray  # (count, 20) float64
    labels: np.ndarray  # (count,) uint8

    def __len__(self):
        return self.labels.size


def normalize_groups(x) -> np.ndarray:
    """Scale each group (row) to unit mean power; all-zero rows pass through.

    Removes the absolute level, which otherwise tracks noise power as much
    as packing ratio and makes networks trained at one Eb/N0 brittle at others.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    rms = np.sqrt(np.mean(x * x, axis=1, keepdims=True))
    return np.divide(x, rms, out=x.copy(), where=rms > 0)


def positive_groups(alpha_k: float, ebn0_db: float, n: int, seed: int, pulse: PulseSpec) -> np.ndarray:
    """``n`` groups at the true ratio, each starting on a symbol's optimal sampling point."""
    step = grid_interval(alpha_k, pulse.I)
    out = np.empty((n, GROUP_LEN))
    for w, s in enumerate(range(0, n, GROUPS_PER_WAVE)):
        b = min(GROUPS_PER_WAVE, n - s)
        link = FtnLink(alpha_k, ebn0_db, seed=derive_seed(seed, 1, w), n_symbols=GROUP_LEN * b)
        _, rx = receive(link, pulse, guard=GUARD_SYMBOLS)
        out[s:s + b] = downsample(rx, step, 0, GROUP_LEN * b).reshape(b, GROUP_LEN)
    return out


def mismatched_groups(alpha: float, alpha_k: float, ebn0_db: float, n: int, seed: int,
                      pulse: PulseSpec) -> np.ndarray:
    """``n`` groups from a signal at ``alpha`` read every ``alpha_k*I`` samples from random phases."""
    step = grid_interval(alpha, pulse.I)
    iv = grid_interval(alpha_k, pulse.I)
    stride = (GROUP_LEN + 1) * iv
    out = np.empty((n, GROUP_LEN))
    for w, s in enumerate(range(0, n, GROUPS_PER_WAVE)):
        b = min(GROUPS_PER_WAVE, n - s)
        wseed = derive_seed(seed, 2, w)
        n_sym = math.ceil(b * stride / step) + 1
        _, rx = receive(FtnLink(alpha, ebn0_db, seed=wseed, n_symbols=n_sym), pulse, guard=GUARD_SYMBOLS)
        offsets = np.random.Generator(np.random.Philox(wseed)).integers(0, iv, b)
        starts = rx.group_delay + np.arange(b) * stride + offsets
        out[s:s + b] = rx.data[starts[:, None] + iv * np.arange(GROUP_LEN)]
    return out


def gen_dataset(alpha_k: float, alpha_pool, ebn0_db: float, count: int, seed: int,
                pulse: PulseSpec | None = None) -> Dataset:
    """Half positive, half negative records, shuffled; deterministic given ``seed``."""
    pulse = pulse or srrc_taps()
    pool = tuple(float(a) for a in alpha_pool)
    if count < 0 or count % 2:
        raise ParameterError(f"record count must be even and non-negative, got {count}")
    if not any(math.isclose(a, alpha_k) for a in pool):
        raise ParameterError(f"alpha_k={alpha_k} is not in the pool {pool}")
    others = [a for a in pool if not math.isclose(a, alpha_k)]
    if not others:
        raise ParameterError("pool needs at least one alternative packing ratio")
    for a in pool:
        grid_interval(a, pulse.I)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0])))
    half = count // 2
    choice = rng.integers(0, len(others), half)
    parts = [positive_groups(alpha_k, ebn0_db, half, derive_seed(seed, 10), pulse)]
    for i, a in enumerate(others):
        parts.append(mismatched_groups(a, alpha_k, ebn0_db, int(np.sum(choice == i)),
                                       derive_seed(seed, 20, i), pulse))
    features = np.concatenate(parts) if count else np.empty((0, GROUP_LEN))
    labels = np.zeros(count, dtype=np.uint8)
    labels[:half] = 1
    order = rng.permutation(count)
    header = DatasetHeader(float(alpha_k), pool, pulse.I, pulse.roll_off, float(ebn0_db), count, int(seed))
    return Dataset(header, features[order], labels[order])


_MAGIC = b"FTND"
_VERSION = 1


def write_dataset(ds: Dataset, path) -> None:
    h = ds.header
    if h.count != len(ds):
        raise ParameterError("header count does not match the number of records")
    head = struct.pack("<4sHdH", _MAGIC, _VERSION, h.alpha_k, len(h.alpha_pool))
    head += struct.pack(f"<{len(h.alpha_pool)}d", *h.alpha_pool)
    head += struct.pack("<HddQQ", h.I, h.roll_off, h.ebn0_db, h.count, h.seed)
    rec = np.empty(len(ds), dtype=RECORD_DTYPE)
    rec["features"] = ds.features
    rec["label"] = ds.labels
    Path(path).write_bytes(head + rec.tobytes())


def read_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    try:
        magic, version, alpha_k, npool = struct.unpack_from("<4sHdH", raw)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        if version != _VERSION:
            raise FormatError(f"{path}: unsupported dataset version {version} (reader supports {_VERSION})")
        pos = struct.calcsize("<4sHdH")
        pool = struct.unpack_from(f"<{npool}d", raw, pos)
        pos += 8 * npool
        I, roll_off, ebn0, count, seed = struct.unpack_from("<HddQQ", raw, pos)
        pos += struct.calcsize("<HddQQ")
    except struct.error as exc:
        raise FormatError(f"{path}: truncated dataset header") from exc
    body = raw[pos:]
    if len(body) != count * RECORD_DTYPE.itemsize:
        raise FormatError(f"{path}: header announces {count} records, body holds "
                          f"{len(body) / RECORD_DTYPE.itemsize:g}")
    rec = np.frombuffer(body, dtype=RECORD_DTYPE)
    if np.any(rec["label"] > 1):
        raise FormatError(f"{path}: label outside {{0, 1}}")
    header = DatasetHeader(alpha_k, tuple(pool), I, roll_off, ebn0, count, seed)
    return Dataset(header, rec["features"].astype(np.float64), rec["label"].copy())
