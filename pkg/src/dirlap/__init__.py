"""Gibbs samplers for the Dirichlet-Laplace shrinkage prior."""
__version__ = "0.1.0"
