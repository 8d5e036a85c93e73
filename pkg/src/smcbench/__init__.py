"""Secret-sharing MPC engine, deterministic network simulator and benchmark harness."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .field import DEFAULT_MODULUS, FieldElement, PrimeModulus
from .sharing import Share, SharePolynomial, ThresholdConfig

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODULUS",
    "FieldElement",
    "KERNEL_BACKEND",
    "PrimeModulus",
    "Share",
    "SharePolynomial",
    "ThresholdConfig",
    "__version__",
]
