"""Exponential functionals of Lévy processes: Wiener-Hopf factors, Bernstein-gamma functions, limits."""
