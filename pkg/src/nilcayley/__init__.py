"""Exact word metrics on Cayley graphs of finite nilpotent groups.

Subpackages:
  groups      group arithmetic, encoding, structural predicates
  metrics     BFS distance maps and the three diameters
  distortion  power decompositions and commutator word synthesis
  lattice     congruence lattices and certified l1 torus diameters
  harness     Monte Carlo trials, empirical distributions, KS comparisons
  cli         command-line interface
"""

from .groups import GeneratingSet, GroupSpec

__all__ = ["GroupSpec", "GeneratingSet"]
__version__ = "0.1.0"
