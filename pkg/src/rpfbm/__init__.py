"""Kernels, reflection positivity and Gaussian sampling for fractional Brownian motion."""
from .projline import INF, MoebiusMap, act, canonical_map, cross_ratio, derivative, involution
from .kernels import KernelSpec, fbm, fbm_normalized
from .definiteness import GramReport, ReflectionSetup, Verdict, check_nd, check_pd, gram

__all__ = [
    "INF", "MoebiusMap", "act", "canonical_map", "cross_ratio", "derivative", "involution",
    "KernelSpec", "fbm", "fbm_normalized",
    "GramReport", "ReflectionSetup", "Verdict", "check_nd", "check_pd", "gram",
]
__version__ = "0.1.0"
