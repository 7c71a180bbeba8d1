"""FTN BPSK baseband: SRRC shaping, AWGN, matched filtering and downsampling.

Time is measured in Nyquist periods (T_N = 1) and signals live on a grid of
``I`` samples per Nyquist period. A packing ratio ``alpha`` therefore places
consecutive symbols ``alpha * I`` samples apart, which must be an integer.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import FormatError, GridError, ParameterError

DEFAULT_I = 20
DEFAULT_ROLL_OFF = 0.3
DEFAULT_SPAN = 96
DEFAULT_L = 96


def rng_for(seed: int, *tags: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and optional stream tags."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *tags])))


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit child seed for the stream identified by ``tags``."""
    return int(np.random.SeedSequence([int(seed), *tags]).generate_state(1, np.uint64)[0])


def grid_interval(alpha: float, I: int) -> int:
    """Symbol spacing in samples for packing ratio ``alpha``; raises GridError off-grid."""
    if not 0 < alpha <= 1:
        raise ParameterError(f"packing ratio must lie in (0, 1], got {alpha}")
    n = round(alpha * I)
    if n < 1 or abs(alpha * I - n) > 1e-9:
        raise GridError(f"alpha*I = {alpha}*{I} is not an integer; resample to a finer grid")
    return int(n)


@dataclass(frozen=True)
class PulseSpec:
    roll_off: float
    span_symbols: int
    I: int
    taps: np.ndarray = field(repr=False)

    @property
    def delay(self) -> int:
        return (len(self.taps) - 1) // 2


@dataclass(frozen=True)
class FtnLink:
    """One simulated transmission."""

    alpha: float
    ebn0_db: float = 4.0
    es: float = 1.0
    seed: int = 0
    n_symbols: int = 1000

    def __post_init__(self):
        if self.es <= 0:
            raise ParameterError("symbol energy must be positive")
        if self.n_symbols < 1:
            raise ParameterError("n_symbols must be positive")
        if not 0 < self.alpha <= 1:
            raise ParameterError(f"packing ratio must lie in (0, 1], got {self.alpha}")

    @property
    def n0(self) -> float:
        # E_b = E_s for BPSK
        return self.es * 10.0 ** (-self.ebn0_db / 10.0)


@dataclass(frozen=True)
class SampleStream:
    data: np.ndarray = field(repr=False)
    group_delay: int
    I: int
    link: FtnLink | None = None


@dataclass(frozen=True)
class IsiProfile:
    alpha: float
    L: int
    taps: np.ndarray  # g(k*alpha) for k = -L..L

    def __getitem__(self, k: int) -> float:
        return float(self.taps[k + self.L])


def srrc_value(t, roll_off: float):
    """Closed-form SRRC impulse response (unnormalized), T_N = 1."""
    t = np.asarray(t, dtype=np.float64)
    b = roll_off
    out = np.empty_like(t)
    at_zero = t == 0
    at_sing = np.isclose(np.abs(t), 1.0 / (4 * b), rtol=0, atol=1e-12)
    reg = ~(at_zero | at_sing)
    tr = t[reg]
    num = np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))
    den = np.pi * tr * (1 - (4 * b * tr) ** 2)
    out[reg] = num / den
    out[at_zero] = 1 - b + 4 * b / np.pi
    out[at_sing] = (b / math.sqrt(2)) * (
        (1 + 2 / np.pi) * math.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * math.cos(np.pi / (4 * b))
    )
    return out


def srrc_taps(roll_off: float = DEFAULT_ROLL_OFF, span_symbols: int = DEFAULT_SPAN,
              I: int = DEFAULT_I) -> PulseSpec:
    """Unit-energy SRRC taps sampled at T_N/I over ``span_symbols`` Nyquist periods."""
    if not 0 < roll_off <= 1:
        raise ParameterError(f"roll-off must lie in (0, 1], got {roll_off}")
    if span_symbols < 2 or span_symbols % 2:
        raise ParameterError(f"span must be a positive even integer, got {span_symbols}")
    if I < 2:
        raise ParameterError(f"need at least 2 samples per symbol, got {I}")
    half = span_symbols * I // 2
    n = np.arange(-half, half + 1)
    h = srrc_value(n / I, roll_off)
    h = 0.5 * (h + h[::-1])  # exact symmetry despite rounding in n/I
    h /= math.sqrt(np.sum(h * h))
    return PulseSpec(roll_off, span_symbols, I, h)


def rc_value(t, roll_off: float = DEFAULT_ROLL_OFF):
    """Raised-cosine pulse g(t), the autocorrelation of the unit-energy SRRC; g(0) = 1."""
    t = np.asarray(t, dtype=np.float64)
    b = roll_off
    sing = np.isclose(np.abs(2 * b * t), 1.0, rtol=0, atol=1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.sinc(t) * np.cos(np.pi * b * t) / (1 - (2 * b * t) ** 2)
    g = np.where(sing, (np.pi / 4) * np.sinc(1 / (2 * b)), g)
    return g[()] if g.ndim == 0 else g


def isi_taps(alpha: float, roll_off: float = DEFAULT_ROLL_OFF, L: int = DEFAULT_L) -> IsiProfile:
    if L < 1:
        raise ParameterError("L must be >= 1")
    k = np.arange(-L, L + 1)
    return IsiProfile(alpha, L, rc_value(k * alpha, roll_off))


def ftn_shape(symbols, link: FtnLink, pulse: PulseSpec) -> SampleStream:
    """Place symbols ``alpha*I`` samples apart and filter with the shaping pulse."""
    symbols = np.asarray(symbols, dtype=np.float64)
    if symbols.size == 0:
        raise ParameterError("no symbols to shape")
    step = grid_interval(link.alpha, pulse.I)
    up = np.zeros((symbols.size - 1) * step + 1)
    up[::step] = math.sqrt(link.es) * symbols
    data = signal.oaconvolve(up, pulse.taps) if up.size > 4096 else np.convolve(up, pulse.taps)
    return SampleStream(data, pulse.delay, pulse.I, link)


def add_awgn(stream: SampleStream, link: FtnLink | None = None) -> SampleStream:
    """Add real white Gaussian noise of variance N0/2 per sample."""
    link = link or stream.link
    if math.isinf(link.ebn0_db) and link.ebn0_db > 0:
        return stream
    sigma = math.sqrt(link.n0 / 2)
    noise = rng_for(link.seed, 1).standard_normal(stream.data.size) * sigma
    return replace(stream, data=stream.data + noise, link=link)


def matched_filter(stream: SampleStream, pulse: PulseSpec) -> SampleStream:
    taps = pulse.taps[::-1]
    x = stream.data
    data = signal.oaconvolve(x, taps) if x.size > 4096 else np.convolve(x, taps)
    return replace(stream, data=data, group_delay=stream.group_delay + pulse.delay)


def downsample(stream: SampleStream, interval_samples: int, offset: int, count: int,
               start: int = 0) -> np.ndarray:
    """Samples ``group_delay + start + offset + j*interval`` for ``j < count``."""
    if not 0 <= offset < interval_samples:
        raise ParameterError(f"offset {offset} outside [0, {interval_samples})")
    first = stream.group_delay + start + offset
    last = first + (count - 1) * interval_samples
    if count < 0 or first < 0 or (count and last >= stream.data.size):
        raise IndexError(
            f"need {last + 1} samples for {count} picks at interval {interval_samples}, "
            f"stream has {stream.data.size}"
        )
    return stream.data[first:last + 1:interval_samples].copy() if count else np.empty(0)


def rx_symbol_oracle(symbols, link: FtnLink, profile: IsiProfile, n: int) -> float:
    """Direct noiseless evaluation of the received-symbol model at symbol index ``n``."""
    x = np.asarray(symbols, dtype=np.float64)
    total = 0.0
    for k in range(n - profile.L, n + profile.L + 1):
        if 0 <= k < x.size:
            total += x[k] * profile[n - k]
    return math.sqrt(link.es) * total


def bpsk_symbols(n: int, rng: np.random.Generator) -> np.ndarray:
    return 2.0 * rng.integers(0, 2, n) - 1.0


def receive(link: FtnLink, pulse: PulseSpec, guard: int = 0) -> tuple[np.ndarray, SampleStream]:
    """Random symbols -> shaping -> AWGN -> matched filter.

    ``guard`` extra symbols are sent before the ``n_symbols`` of interest and
    trimmed from the front of the returned stream so that the first captured
    symbol already carries ISI from its predecessors. Returns the symbols of
    interest and the post-matched-filter stream, aligned so that symbol ``j``
    peaks at ``group_delay + j*alpha*I``.
    """
    step = grid_interval(link.alpha, pulse.I)
    sym = bpsk_symbols(link.n_symbols + 2 * guard, rng_for(link.seed, 0))
    rx = matched_filter(add_awgn(ftn_shape(sym, link, pulse), link), pulse)
    if guard:
        rx = replace(rx, data=rx.data[guard * step:])
    return sym[guard:guard + link.n_symbols], rx


# Sample-stream file: 32-byte little-endian header then float64 samples.
_STREAM_MAGIC = b"FTNS"
_STREAM_VERSION = 1
_STREAM_HEADER = struct.Struct("<4sHHddII")


def write_stream(stream: SampleStream, path) -> None:
    link = stream.link
    alpha = link.alpha if link else float("nan")
    ebn0 = link.ebn0_db if link else float("nan")
    data = np.ascontiguousarray(stream.data, dtype="<f8")
    header = _STREAM_HEADER.pack(_STREAM_MAGIC, _STREAM_VERSION, stream.I, alpha, ebn0,
                                 stream.group_delay, data.size)
    Path(path).write_bytes(header + data.tobytes())


def read_stream(path) -> SampleStream:
    raw = Path(path).read_bytes()
    if len(raw) < _STREAM_HEADER.size:
        raise FormatError(f"{path}: truncated stream header")
    magic, version, I, alpha, ebn0, delay, count = _STREAM_HEADER.unpack_from(raw)
    if magic != _STREAM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_STREAM_MAGIC!r}")
    if version != _STREAM_VERSION:
        raise FormatError(f"{path}: unsupported stream version {version} (reader supports {_STREAM_VERSION})")
    body = raw[_STREAM_HEADER.size:]
    if len(body) != 8 * count:
        raise FormatError(f"{path}: expected {count} samples, found {len(body) / 8:g}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64)
    link = None if math.isnan(alpha) else FtnLink(alpha=alpha, ebn0_db=ebn0, n_symbols=1)
    return SampleStream(data, delay, I, link)
