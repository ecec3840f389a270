"""Ornstein-Uhlenbeck type growth-fragmentation processes.

Submodules:

``numerics``      quadrature, special functions and seeded random streams
``levy_ou``       spectrally negative Levy drivers and OU type processes
``dislocation``   dislocation measures, cumulants and their decompositions
``gf_sim``        event-driven simulation of the particle system
``rrt``           destruction of random recursive trees
``harness``       experiment configs, Monte Carlo comparisons and reports
"""

from . import dislocation, gf_sim, harness, levy_ou, numerics, rrt

__version__ = "0.1.0"

__all__ = ["numerics", "levy_ou", "dislocation", "gf_sim", "rrt", "harness", "__version__"]
