"""Exact workbench for families of Fuchsian systems.

Middle convolution, resonance analysis, isomonodromic 1-forms and their
flatness, plus numerical monodromy as an independent cross-check.
"""

__version__ = "0.1.0"

from .exactnum import QuadScalar, Rational
from .ratfunc import MPoly, RatFunc, poly_gcd
from .matlin import MatRF
from .fuchsys import FuchsFamily, PoleLoc, residue_at_infinity, resonance, resonance_report
from .isoform import MatOneForm, MatTwoForm, flatness_residual, schlesinger_residual
from .midconv import middle_convolution
from .fsdio import load_corpus, load_fsd, parse_fsd, print_fsd

__all__ = [
    "QuadScalar",
    "Rational",
    "MPoly",
    "RatFunc",
    "poly_gcd",
    "MatRF",
    "FuchsFamily",
    "PoleLoc",
    "residue_at_infinity",
    "resonance",
    "resonance_report",
    "MatOneForm",
    "MatTwoForm",
    "flatness_residual",
    "schlesinger_residual",
    "middle_convolution",
    "load_corpus",
    "load_fsd",
    "parse_fsd",
    "print_fsd",
]
