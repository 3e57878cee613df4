"""Numerical laboratory for positivity preservation and stochastic completeness on model manifolds."""
