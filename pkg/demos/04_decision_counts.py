"""How many group decisions does the vote need?

With per-group acceptance probabilities p1 (right detector) and p2 (strongest
wrong one), the vote is right when Bin(M, p1) beats Bin(M, p2).

Run: python3 demos/04_decision_counts.py
"""

from pathlib import Path

from ftnest.metrics import ConfusionTable, convergence_curve, m99_pool, m_99, p_acc, p_acc_mc

for p1, p2 in [(0.75, 0.22), (0.64, 0.17), (0.55, 0.28)]:
    curve = convergence_curve(p1, p2, [1, 5, 10, 20, 40])
    print(f"p1={p1} p2={p2}: " + "  ".join(f"M={m}:{v:.4f}" for m, v in curve)
          + f"  -> 99% at M={m_99(p1, p2)}")

# The closed form agrees with brute-force simulation.
print(f"\np_acc(0.64, 0.17, 10) = {p_acc(0.64, 0.17, 10):.5f}, "
      f"simulated {p_acc_mc(0.64, 0.17, 10, 1_000_000, seed=0):.5f}")

# A full-scale reference confusion table for six ratios at 4 dB.
table_path = Path(__file__).resolve().parents[1] / "tests" / "data" / "reference_confusion_4db.tsv"
table = ConfusionTable.from_tsv(table_path.read_text())
pool = (1.0, 0.9, 0.8, 0.75, 0.6)
per_alpha = m99_pool(table, pool)
print(f"\npool {pool}: decisions per ratio {per_alpha}, worst case {max(per_alpha.values())}")
