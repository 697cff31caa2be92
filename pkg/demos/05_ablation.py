"""Compare the full method with re-ranking off and with the null-space term off."""

import os

from dqvs.sim import (ablation_grid, ablation_suite, default_config, drift_out_of_reach_config,
                      format_table, near_limit_config, run_episode)

rows = ablation_suite(ablation_grid(default_config()), jobs=os.cpu_count() or 1)
print(format_table(rows))

# Two built scenes where the ablations are expected to hurt.
for rerank in (True, False):
    r = run_episode(drift_out_of_reach_config(use_rerank=rerank))
    print(f"block turned away and drifting, rerank={rerank}: success={r.success} ({r.status})")
for null in (True, False):
    r = run_episode(near_limit_config(use_nullspace=null))
    print(f"start near a joint limit, nullspace={null}: {r.clamp_events} clamp events")
