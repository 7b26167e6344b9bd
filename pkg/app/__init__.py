"""Polymatroid games - exact optimization, reoptimization and equilibria over polymatroid base polytopes."""

__version__ = "1.0.0"
