"""Blindly estimate the packing ratio of captured streams.

Every hypothesis splits the stream into alpha_k*I sampling phases, lets its
detector vote on M groups per phase, and keeps its best phase. The ratio with
the most votes wins.

Run after 02_train_detectors.py: python3 demos/03_blind_estimation.py [models_dir]
"""

import sys

from ftnest import mlp
from ftnest.cli import model_path
from ftnest.dsp import FtnLink, receive, srrc_taps
from ftnest.estimator import Hypothesis, capture_symbols, estimate
from ftnest.metrics import estimate_accuracy

POOL = (1.0, 0.8, 0.6)
models_dir = sys.argv[1] if len(sys.argv) > 1 else "models"
hyps = [Hypothesis(ak, mlp.load_model(model_path(models_dir, ak))) for ak in POOL]
pulse = srrc_taps()

# One capture, shown in detail.
M = 60
link = FtnLink(0.8, 4.0, seed=123, n_symbols=capture_symbols(0.8, POOL, M))
_, rx = receive(link, pulse, guard=64)
res = estimate(rx, hyps, M)
for r in res.reports:
    print(f"alpha_k={r.alpha_k:g}: best branch {r.best_branch:>2d} accepted {r.max_count}/{M}")
print(f"estimate: {res.chosen_alpha:g}{' (tie)' if res.tie else ''}\n")

# Accuracy over many captures, as the number of decisions and the SNR vary.
for ebn0 in (0.0, 2.0, 4.0, 8.0):
    row = [estimate_accuracy(hyps, 0.8, ebn0, M, trials=40, seed=7) for M in (5, 20, 60)]
    print(f"Eb/N0={ebn0:g} dB  accuracy at M=5/20/60: " + "  ".join(f"{a:.2f}" for a in row))
