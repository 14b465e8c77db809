#!/usr/bin/env python3
"""
Graph-Adaptive Dimensionality Reduction

Launcher for the grad-dr command line: synthetic manifold generation, PCA /
kernel PCA / graph-regularized and multi-kernel embeddings, local nonlinear
embeddings, evaluation and benchmark reproduction.

Version: 1.0.0
"""

import sys

from modules.cli import main

if __name__ == "__main__":
    sys.exit(main())
