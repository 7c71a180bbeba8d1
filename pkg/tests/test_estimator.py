import itertools

import numpy as np
import pytest

from ftnest import mlp
from ftnest.dataset import GROUP_LEN, gen_dataset
from ftnest.dsp import FtnLink, SampleStream, isi_taps, receive, rx_symbol_oracle, srrc_taps
from ftnest.errors import CapacityError, ParameterError
from ftnest.estimator import (
    Hypothesis, analyze, capture_symbols, decide, estimate, reports_tsv, required_samples, train_hypothesis,
)
from ftnest.metrics import confusion

INF = float("inf")


class Always:
    def __init__(self, p):
        self.p = p

    def predict(self, x):
        return np.full(np.atleast_2d(x).shape[0], self.p)


class UnitMagnitude:
    """Fires when every sample is +-1: aligned, ISI-free, noiseless alpha = 1."""

    def predict(self, x):
        return (np.max(np.abs(np.abs(np.atleast_2d(x)) - 1), axis=1) < 5e-3).astype(float)


class MatchesGroups:
    def __init__(self, groups):
        self.groups = groups

    def predict(self, x):
        x = np.atleast_2d(x)
        d = np.abs(x[:, None, :] - self.groups[None, :, :]).max(axis=2).min(axis=1)
        return (d < 1e-3).astype(float)


@pytest.fixture(scope="module")
def pulse():
    return srrc_taps()


@pytest.fixture(scope="module")
def stream08(pulse):
    link = FtnLink(0.8, INF, seed=21, n_symbols=capture_symbols(0.8, [1.0, 0.8, 0.6], 10))
    return receive(link, pulse, guard=64)


def test_decide():
    assert decide(0.9) == 1
    assert decide(0.5) == 0
    assert decide(0.1) == 0
    assert decide(0.7, threshold=0.8) == 0
    np.testing.assert_array_equal(decide(np.array([0.2, 0.5, 0.51])), [0, 0, 1])


def test_branch_count_and_all_true_stub(stream08):
    _, rx = stream08
    rep = analyze(rx, Hypothesis(0.8, Always(1.0)), M=10)
    assert rep.branch_counts.size == 16
    assert np.all(rep.branch_counts == 10) and rep.max_count == 10
    rep = analyze(rx, Hypothesis(0.6, Always(0.0)), M=10)
    assert rep.branch_counts.size == 12 and rep.max_count == 0


def test_oracle_aligned_stub(stream08):
    sym, rx = stream08
    full = sym
    link = FtnLink(0.8)
    prof = isi_taps(0.8)
    oracle = np.array([rx_symbol_oracle(full, link, prof, n) for n in range(GROUP_LEN * 10)])
    # oracle lacks the guard-symbol ISI at the very start, so use interior groups
    stub = MatchesGroups(oracle.reshape(10, GROUP_LEN)[3:])
    rep = analyze(rx, Hypothesis(0.8, stub, normalize=False), M=10)
    assert rep.branch_counts[0] == 7
    assert np.all(rep.branch_counts[1:] == 0)
    assert rep.best_branch == 0


def test_capacity_error_names_minimum(pulse):
    rx = SampleStream(np.zeros(150), 40, 20, FtnLink(1.0))
    need = required_samples(rx.group_delay, 20, 5)
    with pytest.raises(CapacityError, match=str(need)):
        analyze(rx, Hypothesis(1.0, Always(1.0)), M=5)
    with pytest.raises(ParameterError):
        analyze(rx, Hypothesis(1.0, Always(1.0)), M=0)
    with pytest.raises(ParameterError):
        analyze(rx, Hypothesis(1.0, Always(1.0), I=10), M=1)


def test_capture_symbols_is_sufficient(pulse):
    for a in (1.0, 0.8, 0.75, 0.6):
        n = capture_symbols(a, [1.0, 0.8, 0.6], 60)
        _, rx = receive(FtnLink(a, INF, n_symbols=n), pulse, guard=64)
        for ak in (1.0, 0.8, 0.6):
            analyze(rx, Hypothesis(ak, Always(1.0)), 60)


def test_estimate_rules(stream08):
    _, rx = stream08
    one = estimate(rx, [Hypothesis(0.6, Always(0.0))], 5)
    assert one.chosen_alpha == 0.6 and not one.tie
    hyps = [Hypothesis(1.0, Always(0.1)), Hypothesis(0.8, Always(0.9)), Hypothesis(0.6, Always(0.2))]
    res = estimate(rx, hyps, 5)
    assert res.chosen_alpha == 0.8 and not res.tie
    assert [r.alpha_k for r in res.reports] == [1.0, 0.8, 0.6]
    tie = estimate(rx, [Hypothesis(0.6, Always(1.0)), Hypothesis(0.8, Always(1.0))], 5)
    assert tie.chosen_alpha == 0.8 and tie.tie
    with pytest.raises(ParameterError):
        estimate(rx, [], 5)


def test_estimate_order_independent(stream08):
    _, rx = stream08
    hyps = [Hypothesis(1.0, Always(1.0)), Hypothesis(0.8, Always(1.0)), Hypothesis(0.6, Always(0.0))]
    chosen = {estimate(rx, list(p), 4).chosen_alpha for p in itertools.permutations(hyps)}
    assert chosen == {1.0}


def test_counts_monotone_in_m(pulse):
    w = mlp.init((20, 8, 1), seed=3)
    link = FtnLink(0.8, 4.0, seed=2, n_symbols=capture_symbols(0.8, [1.0], 30))
    _, rx = receive(link, pulse)
    prev = None
    for M in (5, 10, 20, 30):
        counts = analyze(rx, Hypothesis(1.0, w), M).branch_counts
        if prev is not None:
            assert np.all(counts >= prev)
        prev = counts


def test_reports_tsv(stream08):
    _, rx = stream08
    res = estimate(rx, [Hypothesis(0.75, Always(1.0))], 2)
    lines = reports_tsv(res).splitlines()
    assert lines[0] == "alpha_k\tbranch\tcount"
    assert len(lines) == 1 + 15
    assert lines[1] == "0.75\t0\t2"


def test_parallel_estimate_matches_serial(stream08):
    _, rx = stream08
    m = mlp.init((20, 8, 1), seed=5)
    hyps = [Hypothesis(a, m) for a in (1.0, 0.8, 0.6)]
    a = estimate(rx, hyps, 8)
    b = estimate(rx, hyps, 8, workers=3)
    assert a.chosen_alpha == b.chosen_alpha
    for ra, rb in zip(a.reports, b.reports):
        assert np.array_equal(ra.branch_counts, rb.branch_counts)


def test_confusion_with_stubs(pulse):
    zero = mlp.init((20, 4, 1))
    zero.weights = [np.zeros_like(w) for w in zero.weights]
    t = confusion({1.0: zero, 0.8: zero, 0.6: zero}, [1.0, 0.8, 0.6], 4.0, 50, seed=1, pulse=pulse)
    assert t.p_true.shape == (3, 3) and np.all(t.p_true == 0)
    t = confusion({1.0: Hypothesis(1.0, UnitMagnitude(), normalize=False)}, [1.0, 0.8, 0.6], INF, 200,
                  seed=1, pulse=pulse)
    np.testing.assert_array_equal(t.p_true[:, 0], [1.0, 0.0, 0.0])
    with pytest.raises(ParameterError):
        confusion({0.9: zero}, [1.0, 0.8], 4.0, 10, seed=1, pulse=pulse)


def test_train_hypothesis_small(pulse):
    ds = gen_dataset(1.0, [1.0, 0.6], 8.0, 10_000, seed=1, pulse=pulse)
    cfg = mlp.TrainConfig(epochs=5, learning_rate=3e-3, seed=2)
    hyp, hist = train_hypothesis(ds, dims=(20, 32, 1), config=cfg)
    assert hyp.alpha_k == 1.0 and hyp.normalize and len(hist) == 5
    assert hist[-1] < hist[0]
    p = hyp.probabilities(ds.features)
    assert np.mean((p > 0.5) == ds.labels) > 0.55
