"""Sweep one tuning parameter and watch runtime and result counts move.

Each suite runs the pruned and unpruned engines over a seeded workload and
reports median wall time of five repetitions. Raising the threshold makes
pruning bite harder (pruned runtimes fall, unpruned stay flat); widening the
spatial reach pulls in more candidates and more results.
"""

from crowdtrace.bench import build_workload, run_suite

workload = build_workload(n_traj=800, seed=7, query_size=8)

for suite in ("theta", "theta_d"):
    rows = run_suite(suite, workload=workload, repeats=3)
    print(f"\n== sweep: {suite} ==")
    print(f"{'value':>8} {'algo':>8} {'median_ms':>10} {'results':>8}")
    for row in rows:
        print(
            f"{row['value']:>8} {row['algo']:>8} {row['median_ms']:>10.1f} "
            f"{row['result_count']:>8}"
        )
