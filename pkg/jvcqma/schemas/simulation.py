"""
Simulation designs.
"""

from enum import Enum

from pydantic import Field

from .base import Document


class Example(str, Enum):
    """Data-generating models."""
    EX1 = "ex1"
    EX2 = "ex2"
    EX3 = "ex3"
    EX4 = "ex4"


class ErrorCase(int, Enum):
    """Error distributions: N(0,1), t3, normal mixture, chi2(1), Gamma(1,1), lognormal."""
    CASE1 = 1
    CASE2 = 2
    CASE3 = 3
    CASE4 = 4
    CASE5 = 5
    CASE6 = 6


# Error cases each example is run with.
DEFAULT_PAIRINGS = {
    Example.EX1: frozenset({ErrorCase.CASE1, ErrorCase.CASE2, ErrorCase.CASE3}),
    Example.EX2: frozenset({ErrorCase.CASE4, ErrorCase.CASE5, ErrorCase.CASE6}),
    Example.EX3: frozenset(ErrorCase),
    Example.EX4: frozenset(ErrorCase),
}


class SimDesign(Document):
    """One simulation setting; ``p`` only applies to ex1 and ex2."""

    example: Example
    error_case: ErrorCase
    n: int = Field(..., ge=2, description="Training sample size")
    p: int = Field(5, ge=5, description="Covariates for ex1/ex2")
    seed: int = Field(0, ge=0, lt=2**64, description="Stream seed")
    n_test: int = Field(100, ge=1, description="Test sample size")
    allow_any_pairing: bool = Field(False, description="Skip the example/error-case pairing check")

    @property
    def is_default_pairing(self) -> bool:
        return ErrorCase(self.error_case) in DEFAULT_PAIRINGS[Example(self.example)]

    def with_seed(self, seed: int) -> "SimDesign":
        return self.model_copy(update={"seed": int(seed)})
