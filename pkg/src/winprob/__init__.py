"""In-game home win probability for basketball from play-by-play data.

Dynamic-prior beta-binomial estimates over an (elapsed time, lead) lattice,
optionally blended with a pregame probability, plus Brier-score evaluation
and a synthetic-game simulator for testing.
"""

__version__ = "0.1.0"
