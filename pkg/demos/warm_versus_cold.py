"""What a heuristic incumbent buys under a node budget.

Two searches on the same plain big-M model: one seeded with the
first-order heuristic's point, one cold.  With the budget too small to
finish, the seeded run starts pruning from a good objective while the
cold run spends nodes earning one.
"""

import numpy as np

from ddsel import (
    DesignMatrix,
    ProblemData,
    SynthSpec,
    compare_warm_vanilla,
    gen_type_synth,
    reference_delta,
)

inst = gen_type_synth(SynthSpec(n=80, p=160, rho=0.0, k_star=8, snr=3.0, seed=4))
dref = reference_delta(inst.design, inst.response, inst.beta_star)
prob = ProblemData(inst.design, inst.response, dref)

duel = compare_warm_vanilla(prob, node_limit=800)

for tag, res in (("warm", duel.warm), ("cold", duel.vanilla)):
    inc = res.incumbent
    size = "-" if inc is None else inc.objective
    print(
        f"{tag}: incumbent {size}, lower bound {res.lower_bound}, "
        f"gap {res.gap:.2f}, nodes {res.nodes_explored}, {res.wall_time:.1f}s"
    )

planted = int(np.sum(inst.beta_star != 0.0))
print(f"planted size {planted}")

print()
print("incumbent trajectory (upper bound by node count):")
for tag, res in (("warm", duel.warm), ("cold", duel.vanilla)):
    steps = [
        f"{e.nodes}:{int(e.upper) if np.isfinite(e.upper) else '-'}"
        for e in res.progress[:8]
    ]
    print(f"  {tag}: " + "  ".join(steps))
