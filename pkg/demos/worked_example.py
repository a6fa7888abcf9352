"""
One replication decision, step by step
======================================

Six cluster headers, five files and a fixed RI matrix. We let PFR make a
single interval-end decision and look at every action it takes.
"""

# %%
from gridrep.config import build_state, worked_example_config
from gridrep.pfr import PfrParams, run_interval, select_primary
from gridrep.state import dependent_files
from gridrep.strategies import serve_request

state, ri = build_state(worked_example_config())
print(state.tree.dump_edges())

# %%
# The highest score whose usage ratio passes the gate wins.
m, n = select_primary(ri, state.catalog, state.usage, PfrParams())
print("primary:", (m, n), "RI =", ri[m, n])
print("path from", m, "to the root:", state.header_path(m))
print("files depending on", n, ":", dependent_files(state.dep, n))

# %%
# Run the whole decision. File 1 goes down to node 6 since it scores higher
# there, file 2 stops at node 2.
for a in run_interval(state, PfrParams(), injected_ri=ri):
    print(a)

# %%
# A request for file 2 from node 6 is now served one hop away.
print(serve_request(state, 6, 2))
