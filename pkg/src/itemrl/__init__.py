"""List-wise recommendation reinforcement learning at desk scale:
request-level advantage actor-critic and its item-decomposed variants
with future-impact reweighting, trained against a synthetic sessionized
user environment."""

__version__ = "0.1.0"
