"""Blind packing-ratio estimation by counting per-branch network decisions.

Each hypothesis ``alpha_k`` reads the matched-filter output every
``alpha_k*I`` samples from each of its ``alpha_k*I`` possible phases
(branches), cuts every branch into consecutive 20-sample groups, and counts
how many groups its network accepts. The hypothesis whose best branch has
the highest count wins.

Models are duck-typed: anything with ``predict(x) -> probabilities`` for
a ``(n, 20)`` batch works, which keeps stubs trivial in tests. Unless a
hypothesis sets ``normalize=False``, each group is scaled to unit power
before it reaches the model; :func:`train_hypothesis` applies the same
scaling so training and inference agree.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import mlp
from .dataset import GROUP_LEN, Dataset, normalize_groups
from .dsp import SampleStream, downsample, grid_interval
from .errors import CapacityError, ParameterError


@dataclass(frozen=True)
class Hypothesis:
    alpha_k: float
    model: object
    I: int = 20
    normalize: bool = True

    def probabilities(self, groups) -> np.ndarray:
        return self.model.predict(normalize_groups(groups) if self.normalize else groups)

    @property
    def interval_samples(self) -> int:
        return grid_interval(self.alpha_k, self.I)


@dataclass
class AnalysisReport:
    alpha_k: float
    branch_counts: np.ndarray
    M: int

    @property
    def max_count(self) -> int:
        return int(self.branch_counts.max())

    @property
    def best_branch(self) -> int:
        return int(np.argmax(self.branch_counts))


@dataclass
class EstimateResult:
    chosen_alpha: float
    reports: list[AnalysisReport]
    tie: bool


def decide(probability, threshold: float = 0.5):
    """1 where probability is strictly above ``threshold``, else 0."""
    out = (np.asarray(probability) > threshold).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def required_samples(group_delay: int, interval: int, M: int) -> int:
    """Stream length needed for ``M`` groups on every branch."""
    return group_delay + (interval - 1) + (GROUP_LEN * M - 1) * interval + 1


def capture_symbols(alpha: float, alpha_ks, M: int, I: int = 20) -> int:
    """Symbols to transmit at ``alpha`` so every hypothesis in ``alpha_ks`` gets ``M`` groups."""
    step = grid_interval(alpha, I)
    longest = max(grid_interval(a, I) for a in alpha_ks)
    return math.ceil((GROUP_LEN * M + 1) * longest / step) + 1


def analyze(stream: SampleStream, hyp: Hypothesis, M: int, threshold: float = 0.5,
            offsets=None) -> AnalysisReport:
    """Count accepted groups on each branch (or only on ``offsets``)."""
    if M < 1:
        raise ParameterError("need at least one decision per branch")
    if hyp.I != stream.I:
        raise ParameterError(f"hypothesis grid I={hyp.I} differs from stream grid I={stream.I}")
    iv = hyp.interval_samples
    need = required_samples(stream.group_delay, iv, M)
    if stream.data.size < need:
        raise CapacityError(
            f"alpha_k={hyp.alpha_k}: {M} decisions per branch need a stream of at least "
            f"{need} samples, got {stream.data.size}"
        )
    offsets = range(iv) if offsets is None else offsets
    counts = np.empty(len(offsets), dtype=np.int64)
    for i, o in enumerate(offsets):
        groups = downsample(stream, iv, o, GROUP_LEN * M).reshape(M, GROUP_LEN)
        counts[i] = np.sum(decide(hyp.probabilities(groups), threshold))
    return AnalysisReport(hyp.alpha_k, counts, M)


def estimate(stream: SampleStream, hypotheses, M: int, threshold: float = 0.5,
             workers: int = 1) -> EstimateResult:
    """Pick the hypothesis with the largest best-branch count; ties go to the larger alpha_k."""
    hypotheses = list(hypotheses)
    if not hypotheses:
        raise ParameterError("no hypotheses to test")
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            reports = list(ex.map(lambda h: analyze(stream, h, M, threshold), hypotheses))
    else:
        reports = [analyze(stream, h, M, threshold) for h in hypotheses]
    top = max(r.max_count for r in reports)
    winners = [r.alpha_k for r in reports if r.max_count == top]
    return EstimateResult(max(winners), reports, len(winners) > 1)


def train_hypothesis(ds: Dataset, dims=mlp.DESK_DIMS, config: mlp.TrainConfig | None = None,
                     normalize: bool = True, log=None) -> tuple[Hypothesis, list[float]]:
    """Fit a fresh network for ``ds.header.alpha_k`` and wrap it as a hypothesis."""
    config = config or mlp.TrainConfig()
    model = mlp.init(dims, config.seed)
    x = normalize_groups(ds.features) if normalize else ds.features
    model, history = mlp.train(model, x, ds.labels, config, log=log)
    return Hypothesis(ds.header.alpha_k, model, ds.header.I, normalize), history


def reports_tsv(result: EstimateResult) -> str:
    lines = ["alpha_k\tbranch\tcount"]
    for r in result.reports:
        lines += [f"{float(r.alpha_k)!r}\t{b}\t{c}" for b, c in enumerate(r.branch_counts)]
    return "\n".join(lines) + "\n"
