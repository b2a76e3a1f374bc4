"""dioph_lab: estimate standard, multiplicative, and simultaneous
Diophantine exponents of vectors and hyperplanes by mutually checking
routes (integer record search, continued fractions, lattice flows)."""

__version__ = "0.1.0"

from .numeric import ExactReal, dist_to_int, nearest_int, prod_mult, sup_norm

__all__ = [
    "ExactReal",
    "dist_to_int",
    "nearest_int",
    "prod_mult",
    "sup_norm",
    "__version__",
]
