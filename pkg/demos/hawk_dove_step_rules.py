# %% [markdown]
# # Hawk-Dove under different step-size rules
#
# The normalized Hawk-Dove game has its evolutionarily stable state at (1/2, 1/2).
# This script runs the discrete replicator map from the same start under a constant
# rate, a per-population rate, the rate derived from the stable state itself, and the
# backtracking line search. It then prints how each run ended.

# %%
import numpy as np

from mwstab import (
    Constant,
    EssOracle,
    LineSearch,
    PerPopulation,
    linear_symmetric_game,
    lyapunov_first_difference,
    normalize_game,
    run_trajectory,
)
from mwstab.games import as_state
from mwstab.dynamics import line_search_terms

game = normalize_game(linear_symmetric_game([[-1, 2], [0, 1]]))
target = np.array([0.5, 0.5])
start = [0.9, 0.1]
print("normalized payoff matrix\n", game.params["matrix"])

# %% [markdown]
# One step of size 0.1 from (0.9, 0.1) lowers the relative entropy to the stable state.

# %%
print("first difference of the relative entropy:",
      lyapunov_first_difference(game, start, target, 0.1))

# %%
rules = {
    "constant 0.5": Constant(0.5),
    "per population 0.3": PerPopulation(0.3),
    "ess oracle": EssOracle(as_state(game.structure, target)),
    "line search": LineSearch(),
}
for name, rule in rules.items():
    traj = run_trajectory(game, start, rule, max_iters=100_000, target=target)
    err = np.max(np.abs(traj.final.values - target))
    print(f"{name:>20}: {traj.stop_reason:<18} iterations={traj.iterations:<6} error={err:.2e}")

# %% [markdown]
# The line search stops at once. Its acceptance quantity is a product of a factor
# that is at least one and a factor whose reciprocal is at most one plus the same
# excess, so in exact arithmetic it never drops below one. Working in logarithms
# makes that visible: the log of the product stays non-negative as the rate shrinks.

# %%
for alpha in [1.0, 1e-2, 1e-4, 1e-8]:
    t = line_search_terms(game, start, alpha)
    print(f"alpha={alpha:.0e}  log f={t.log_f:+.3e}")
