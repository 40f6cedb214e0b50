from .diagonal import BlockFamily, DiagonalFamily
from .differential import DiracFamily, HainLustFamily, ScalarFamily, StokesFamily
from .multiplied import (
    BlockMultiplier,
    FunctionMultiplier,
    MatrixMultiplier,
    MultipliedFamily,
)

__all__ = [
    "DiagonalFamily",
    "BlockFamily",
    "ScalarFamily",
    "DiracFamily",
    "StokesFamily",
    "HainLustFamily",
    "MultipliedFamily",
    "FunctionMultiplier",
    "BlockMultiplier",
    "MatrixMultiplier",
]
