"""Sparse functional learning from random samples.

Sample a function at random points, recover a sparse dictionary code with a
class-uniform soft-thresholding iteration, reconstruct, and evaluate Hölder
functionals, with every finite-sample bound exposed as a checkable number.
"""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
