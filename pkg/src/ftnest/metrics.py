"""Decision statistics, count-argmax accuracy and empirical evaluation.

The analytic accuracy treats the true hypothesis and its strongest
competitor as two independent binomial counts over ``M`` decisions and asks
for the probability that the true count is strictly larger.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .dsp import FtnLink, derive_seed, PulseSpec, receive, srrc_taps
from .errors import ParameterError, UnreachableTargetError
from .estimator import Hypothesis, analyze, capture_symbols, estimate

MAX_M = 100_000


@dataclass(frozen=True)
class DecisionStats:
    p1: float
    p2: float
    M: int

    def __post_init__(self):
        if not (0 <= self.p1 <= 1 and 0 <= self.p2 <= 1):
            raise ParameterError(f"probabilities must lie in [0, 1], got {self.p1}, {self.p2}")
        if self.M < 1:
            raise ParameterError("M must be positive")


def binom_pmf(M: int, p: float) -> np.ndarray:
    """Binomial(M, p) probabilities for k = 0..M through log-gamma terms."""
    k = np.arange(M + 1, dtype=np.float64)
    logc = gammaln(M + 1.0) - gammaln(k + 1.0) - gammaln(M - k + 1.0)
    return np.exp(logc + xlogy(k, p) + xlog1py(M - k, -p))


def p_acc(p1: float, p2: float, M: int) -> float:
    """P(X > Y) for independent X ~ Bin(M, p1), Y ~ Bin(M, p2); ties count as failures."""
    s = DecisionStats(p1, p2, M)
    f = binom_pmf(M, s.p1)
    cdf2 = np.cumsum(binom_pmf(M, s.p2))
    # sum over m >= 1 of P(X=m) P(Y <= m-1)
    return float(min(1.0, np.dot(f[1:], cdf2[:-1])))


def p_tie(p1: float, p2: float, M: int) -> float:
    return float(np.dot(binom_pmf(M, p1), binom_pmf(M, p2)))


def p_acc_mc(p1: float, p2: float, M: int, trials: int, seed: int) -> float:
    """Monte Carlo estimate of :func:`p_acc`."""
    DecisionStats(p1, p2, M)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0x3C])))
    x = rng.binomial(M, p1, trials)
    y = rng.binomial(M, p2, trials)
    return float(np.mean(x > y))


def m_99(p1: float, p2: float, target: float = 0.99, max_m: int = MAX_M) -> int:
    """Smallest M with p_acc >= target, by doubling then bisection."""
    if not 0 < target < 1:
        raise ParameterError(f"target must lie in (0, 1), got {target}")
    if p1 <= p2:
        raise UnreachableTargetError(f"p1={p1} <= p2={p2}: accuracy never reaches {target}")
    if p_acc(p1, p2, 1) >= target:
        return 1
    lo, hi = 1, 2
    while p_acc(p1, p2, hi) < target:
        lo, hi = hi, hi * 2
        if lo >= max_m:
            raise UnreachableTargetError(f"more than {max_m} decisions needed for target {target}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if p_acc(p1, p2, mid) >= target:
            hi = mid
        else:
            lo = mid
    if hi > max_m:
        raise UnreachableTargetError(f"more than {max_m} decisions needed for target {target}")
    return hi


def convergence_curve(p1: float, p2: float, Ms) -> list[tuple[int, float]]:
    return [(int(m), p_acc(p1, p2, int(m))) for m in Ms]


@dataclass
class ConfusionTable:
    """Fraction of accepted groups; rows are true ratios, columns hypotheses."""

    alphas: tuple[float, ...]
    alpha_ks: tuple[float, ...]
    p_true: np.ndarray
    n_groups: int
    ebn0_db: float

    def cell(self, alpha: float, alpha_k: float) -> float:
        return float(self.p_true[_index(self.alphas, alpha), _index(self.alpha_ks, alpha_k)])

    def stats(self, alpha: float, pool=None) -> tuple[float, float]:
        """(p1, p2) for true ratio ``alpha``: its own column vs. the strongest other column in ``pool``."""
        pool = self.alpha_ks if pool is None else pool
        row = self.p_true[_index(self.alphas, alpha)]
        others = [row[_index(self.alpha_ks, a)] for a in pool if not math.isclose(a, alpha)]
        if not others:
            raise ParameterError("pool has no competitor for this ratio")
        return float(row[_index(self.alpha_ks, alpha)]), float(max(others))

    def dominance(self, alpha: float) -> float:
        """Diagonal minus the largest off-diagonal entry in the row of ``alpha``."""
        p1, p2 = self.stats(alpha)
        return p1 - p2

    def to_tsv(self) -> str:
        lines = ["alpha\\alpha_k\t" + "\t".join(f"{float(a)!r}" for a in self.alpha_ks)]
        for a, row in zip(self.alphas, self.p_true):
            lines.append(f"{float(a)!r}\t" + "\t".join(f"{float(v)!r}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, n_groups: int = 0, ebn0_db: float = float("nan")) -> "ConfusionTable":
        rows = [ln.split("\t") for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
        if len(rows) < 2:
            raise ParameterError("table needs a header line and at least one row")
        alpha_ks = tuple(float(v) for v in rows[0][1:])
        alphas = tuple(float(r[0]) for r in rows[1:])
        p = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        if p.shape != (len(alphas), len(alpha_ks)):
            raise ParameterError("ragged confusion table")
        return cls(alphas, alpha_ks, p, n_groups, ebn0_db)


def _index(values, a) -> int:
    for i, v in enumerate(values):
        if math.isclose(v, a, abs_tol=1e-12):
            return i
    raise ParameterError(f"{a} not among {tuple(values)}")


def m99_pool(table: ConfusionTable, pool, target: float = 0.99) -> dict[float, int]:
    """m_99 per true ratio in ``pool`` with competitors restricted to ``pool``."""
    return {float(a): m_99(*table.stats(a, pool), target) for a in pool}


def as_hypotheses(models, I: int = 20) -> dict[float, Hypothesis]:
    """Accept a mapping alpha_k -> model (or -> Hypothesis), or an iterable of Hypothesis."""
    if isinstance(models, Mapping):
        items = models.items()
    else:
        items = ((h.alpha_k, h) for h in models)
    out = {}
    for ak, m in items:
        out[float(ak)] = m if isinstance(m, Hypothesis) else Hypothesis(float(ak), m, I)
    if not out:
        raise ParameterError("no models given")
    return out


def confusion(models, alpha_pool, ebn0_db: float, n_groups: int,
              seed: int, pulse: PulseSpec | None = None, workers: int = 1) -> ConfusionTable:
    """Measure P(decision = 1) for every (true ratio, hypothesis) pair.

    ``models`` maps alpha_k to a model or Hypothesis. Matched cells use the
    branch aligned with the symbol peaks. Mismatched cells report the best
    of all branches, which is what the count-argmax rule competes against.
    """
    pulse = pulse or srrc_taps()
    hyps = as_hypotheses(models, pulse.I)
    alphas = tuple(float(a) for a in alpha_pool)
    alpha_ks = tuple(sorted(hyps, reverse=True))
    for a in alpha_ks:
        if not any(math.isclose(a, b) for b in alphas):
            raise ParameterError(f"model for alpha_k={a} is outside the pool {alphas}")

    def cell(ij):
        i, j = ij
        a, ak = alphas[i], alpha_ks[j]
        cell_seed = derive_seed(seed, round(a * 1e6), round(ak * 1e6))
        link = FtnLink(a, ebn0_db, seed=cell_seed, n_symbols=capture_symbols(a, [ak], n_groups, pulse.I))
        _, rx = receive(link, pulse, guard=64)
        hyp = hyps[ak]
        aligned = math.isclose(a, ak)
        rep = analyze(rx, hyp, n_groups, offsets=[0] if aligned else None)
        return rep.max_count / n_groups

    cells = [(i, j) for i in range(len(alphas)) for j in range(len(alpha_ks))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(cell, cells))
    else:
        vals = [cell(c) for c in cells]
    p = np.array(vals, dtype=np.float64).reshape(len(alphas), len(alpha_ks))
    return ConfusionTable(alphas, alpha_ks, p, n_groups, float(ebn0_db))


def snr_sweep(models, alpha_pool, ebn0_list, n_groups: int, seed: int,
              pulse: PulseSpec | None = None, workers: int = 1) -> list[ConfusionTable]:
    """Confusion tables at each Eb/N0 using the same (fixed) models."""
    return [confusion(models, alpha_pool, e, n_groups, seed, pulse, workers) for e in ebn0_list]


def estimate_accuracy(models, alpha: float, ebn0_db: float, M: int,
                      trials: int, seed: int, pulse: PulseSpec | None = None,
                      threshold: float = 0.5) -> float:
    """Fraction of independent captures at ``alpha`` for which :func:`estimate` is right."""
    pulse = pulse or srrc_taps()
    hyps = list(as_hypotheses(models, pulse.I).values())
    n_sym = capture_symbols(alpha, [h.alpha_k for h in hyps], M, pulse.I)
    hits = 0
    for t in range(trials):
        link = FtnLink(alpha, ebn0_db, seed=derive_seed(seed, 7, t), n_symbols=n_sym)
        _, rx = receive(link, pulse, guard=64)
        hits += math.isclose(estimate(rx, hyps, M, threshold).chosen_alpha, alpha)
    return hits / trials
