"""Which weight sequences are quasi-analytic, and how far does a budget reach?

Run with ``python3 demos/sequences_and_bang.py``.  The script prints the
Denjoy-Carleman verdict for a few families, then a table of Bang degrees
showing how the degree grows as ``t`` shrinks and the budget ``r`` grows.
"""
import math

from gsobs import INFINITE, SequenceModel, WeightModel, bang_degree, check_hypotheses, denjoy_carleman_diagnostic

families = {
    "M_p = 1": SequenceModel.constant(),
    "M_p = p!": SequenceModel.power_factorial(1.0, 1.0),
    "M_p = (p!)^1/2": SequenceModel.power_factorial(1.0, 0.5),
    "M_p = (p!)^2": SequenceModel.power_factorial(1.0, 2.0),
}

print("Denjoy-Carleman verdicts (partial sum at P = 200)")
for name, m in families.items():
    rep = denjoy_carleman_diagnostic(m, 200)
    print(f"  {name:16s} {rep.verdict:18s} sum = {rep.dc_partial_sums[-1]:.4f}")

# The squared factorial has a convergent ratio series, so a big enough budget
# is never exhausted and the degree is infinite.
print("\nBang degree n(t, M, r)")
ts, rs = [1.0, 0.1, 0.01], [0.5, 1.0, 2.0]
for name, m in families.items():
    cells = []
    for t in ts:
        for r in rs:
            n = bang_degree(m, t, r)
            cells.append("INF" if n == INFINITE else str(int(n)))
    print(f"  {name:16s}", " ".join(f"{c:>4s}" for c in cells))
print(f"  (columns: t in {ts}, r in {rs} for each t; INF threshold for (p!)^2 at t = 1 is {math.pi**2/6:.6f})")

print("\nWeight-induced sequences")
for label, w in (("Theta(t) = t", WeightModel.linear()),
                 ("Bertrand k=1", WeightModel.bertrand(1, 1.0)),
                 ("Theta(t) = t^2", WeightModel.power(2.0))):
    rep = check_hypotheses(w, 1.0, 50)
    print(f"  {label:16s} H1={rep.h1!s:5s} H2={rep.h2_status:10s} verdict={rep.verdict}")
