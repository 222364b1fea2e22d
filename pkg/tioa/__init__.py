"""
Robustness analysis of timed I/O specifications.

The package is organised bottom-up: ``model`` and ``zones`` hold the automaton
syntax and the exact zone algebra, ``game`` solves timed safety games on the
zone graph, ``transforms`` builds the game automata, ``parametric`` and
``search`` compute the greatest admissible perturbation, and ``refinement``
decides (robust) satisfaction.
"""

__version__ = "1.0.0"
