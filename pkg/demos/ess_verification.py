# %% [markdown]
# # Checking candidate states
#
# classify() reports whether a candidate is a fixed point of the dynamics, a Nash
# equilibrium, and whether sampling near it finds a state that beats it.

# %%
from mwstab import classify, linear_symmetric_game, normalize_game

hawk_dove = normalize_game(linear_symmetric_game([[-1, 2], [0, 1]]))
rps = normalize_game(linear_symmetric_game([[0, -1, 1], [1, 0, -1], [-1, 1, 0]]))

cases = [
    ("Hawk-Dove mixed", hawk_dove, [0.5, 0.5]),
    ("Hawk-Dove pure hawk", hawk_dove, [1.0, 0.0]),
    ("rock-paper-scissors centre", rps, [1 / 3, 1 / 3, 1 - 2 / 3]),
]
for name, game, candidate in cases:
    print(f"{name}: {classify(game, candidate, rng_seed=1).to_json()}")

# %% [markdown]
# Pure hawk is a fixed point because unused strategies never reappear, but it is not
# Nash. The centre of rock-paper-scissors is Nash, yet neutral directions exist, so
# the sampler reports a witness rather than a certificate.
