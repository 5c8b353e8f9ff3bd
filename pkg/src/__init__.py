"""
Sym-Cube Twist Lab Package
Central values of symmetric-cube L-functions of level-one eigenforms twisted
by imaginary quadratic characters, their mixed moments, and the prime-sum
diagnostics behind the conditional bounds.
"""

__version__ = "1.0.0"
__license__ = "MIT"

# Package-level exports
from . import config_loader
from . import errors
from . import primes
from . import quadchar
from . import hecke
from . import load_data
from . import lvalue
from . import generate_reports
from . import moments
from . import grh

__all__ = [
    "config_loader",
    "errors",
    "primes",
    "quadchar",
    "hecke",
    "load_data",
    "lvalue",
    "generate_reports",
    "moments",
    "grh",
]
