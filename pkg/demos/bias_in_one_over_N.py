"""How the particle estimate of eta_n(f) approaches the exact value as N grows.

Runs the forward particle system on the two-state "mixing" corpus model,
compares replicate means of an ancestral-line function with the exact
path-space value, and prints the bias scaled by N (roughly constant when
the bias is first order in 1/N).

    python3 demos/bias_in_one_over_N.py
"""

import numpy as np

from fk_lab.model import lift_to_path
from fk_lab.oracle.measures import exact_measures
from fk_lab.smc import simulate_batch
from fk_lab.verify.corpus import mixing_model

model = mixing_model(4)
lift = lift_to_path(model)
_, etas = exact_measures(lift)
paths = np.array(np.unravel_index(np.arange(lift.space_sizes[-1]), model.space_sizes)).T
f = (paths == 0).sum(axis=1).astype(float)         # time spent in state 0 along the path
exact = etas[-1](f)

R = 20_000
print(f"exact eta_n(f) = {exact:.6f}")
print(f"{'N':>5} {'mean':>10} {'bias':>11} {'N*bias':>9} {'stderr':>9}")
for N in (10, 20, 40, 80):
    batch = simulate_batch(model, N, seed=1, replicate_ids=np.arange(R), stream=N)
    est = f[batch.path_indices()].mean(axis=1)
    bias = est.mean() - exact
    se = est.std(ddof=1) / np.sqrt(R)
    print(f"{N:>5} {est.mean():>10.6f} {bias:>11.2e} {N * bias:>9.4f} {se:>9.1e}")
