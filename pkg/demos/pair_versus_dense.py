"""A two-variable signal the l1 relaxation refuses to find.

The design hides a +1/-1 pair inside near-collinear columns.  Above a
critical delta the count objective returns the pair; the l1 objective
prefers a cheaper dense combination spread over almost every column,
whose l1 norm stays below 2 however small delta gets.  This is the
small worked case where the two objectives provably part ways.
"""

from ddsel import MiloConfig, gen_example1, solve_l1_dantzig, solve_with_intelligence

inst = gen_example1(n=10, tau=1.0 / 22.0)
crit = inst.l0_recovery_delta
print(f"pair design n=10, tau={inst.tau:.4f}, critical delta {crit:.4f}")
print(f"dense l1 cost of the competing representation: {inst.dense_l1_cost:.4f}")
print()
print(f"{'delta':>9} {'l0 size':>8} {'l0 support':>12} {'l1 nnz':>7} {'l1 norm':>8}")

for frac in (1.5, 1.05, 0.9, 0.5, 0.1):
    delta = frac * crit
    prob = inst.problem(delta)
    res = solve_with_intelligence(prob, config=MiloConfig(heuristic=False))
    l1 = solve_l1_dantzig(prob)
    supp = ",".join(str(j + 1) for j in sorted(res.incumbent.support)) or "-"
    print(
        f"{delta:9.4f} {res.incumbent.objective:8d} {supp:>12} "
        f"{len(l1.support):7d} {l1.l1_norm():8.4f}"
    )

print()
print("below the critical delta the count objective pins the pair exactly;")
print("the l1 minimizer keeps nine-plus columns and a norm under 2")
