"""Exact p-adic arithmetic and a certified wandering-disc construction for a perturbed polynomial family."""
from .padic import (
    Context,
    Elem,
    UltraBall,
    PadicError,
    PrecisionLoss,
    NotAUnit,
    RadiusNotRepresentable,
    add,
    from_digits,
    from_rational,
    inv,
    mul,
    parse_digit_string,
    residue,
    to_digit_string,
    valuation,
)

__version__ = "0.1.0"
