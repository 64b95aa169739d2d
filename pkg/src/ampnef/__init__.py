"""Exact-arithmetic toolkit for ample/nef cones of automorphic line bundles
on mod-p unitary Shimura varieties and their partial flag spaces.

All verdict paths use exact rational arithmetic (fractions.Fraction); no
floating point is involved anywhere in a decision.
"""

from .datum import (
    DatumError,
    Signature,
    FlagWeight,
    ParallelWeightX,
    MinimalFlagWeight,
    BlockWeight,
    validate_signature,
    essential_set,
    expand_weight,
)
from .criteria import (
    CaseTag,
    Verdict,
    classify_case,
    check_flag,
    check_X,
    check_partial_nef,
    check_minimal_crosscheck,
)

__all__ = [
    "DatumError",
    "Signature",
    "FlagWeight",
    "ParallelWeightX",
    "MinimalFlagWeight",
    "BlockWeight",
    "validate_signature",
    "essential_set",
    "expand_weight",
    "CaseTag",
    "Verdict",
    "classify_case",
    "check_flag",
    "check_X",
    "check_partial_nef",
    "check_minimal_crosscheck",
]

__version__ = "0.1.0"
