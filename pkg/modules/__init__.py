"""
Graph-Adaptive Dimensionality Reduction - Modules Package
"""

__version__ = "1.0.0"
__author__ = "grad-dr developers"
