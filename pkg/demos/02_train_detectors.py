"""Build training groups, fit one detector per packing ratio, tabulate decisions.

Each detector answers one question for a 20-sample group: "were these
samples taken at my ratio, on the symbol peaks?" The confusion table holds the
fraction of accepted groups for every (true ratio, detector) pair.

Run: python3 demos/02_train_detectors.py [out_dir]   (about 2 minutes)
"""

import sys
from pathlib import Path

from ftnest import mlp
from ftnest.cli import model_path
from ftnest.dataset import gen_dataset
from ftnest.estimator import train_hypothesis
from ftnest.metrics import confusion, m_99

POOL = (1.0, 0.8, 0.6)
out = Path(sys.argv[1] if len(sys.argv) > 1 else "models")
out.mkdir(exist_ok=True)

hyps = {}
for i, ak in enumerate(POOL):
    # half positives at alpha_k, half groups from the other ratios at random phases
    ds = gen_dataset(ak, POOL, ebn0_db=4.0, count=200_000, seed=10 + i)
    hyp, hist = train_hypothesis(ds, mlp.DESK_DIMS, mlp.TrainConfig(epochs=10, seed=i))
    print(f"alpha_k={ak:g}: loss {hist[0]:.4f} -> {hist[-1]:.4f}")
    mlp.save_model(hyp.model, model_path(out, ak))
    hyps[ak] = hyp

table = confusion(hyps, POOL, 4.0, n_groups=3000, seed=1)
print("\nP(accept) at 4 dB, rows = true ratio, columns = detector")
print(table.to_tsv())
for a in POOL:
    p1, p2 = table.stats(a)
    print(f"alpha={a:g}: own {p1:.3f}, best rival {p2:.3f}, decisions for 99%: {m_99(p1, p2)}")
print(f"\nmodels written to {out}/ (use with: ftnest estimate --models-dir {out} ...)")
