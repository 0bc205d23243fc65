"""shiftscope: distribution-shift diagnostics for generated dialogue.

Discrete energy distance over finite label spaces, k-means coarsenings,
test divergence between paired human/generated dialogues, exact evaluation
of the adaptation bound on enumerable instances, brute-force oracles for
the identities behind it, and a toy cooperative-learning game where the
energy statistic can be watched doing its job.
"""

__version__ = "0.1.0"
