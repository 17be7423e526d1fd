"""Mask-diversity counts and N:M violation probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .exceptions import DivisibilityError, NMSparseError
from .tensor_core import NmConfig

__all__ = [
    "STRUCTURES",
    "DiversityQuery",
    "mask_diversity",
    "diversity_table",
    "format_scientific",
    "sparse_probability",
    "violation_probability",
    "phase_curve",
    "transition_slope",
    "select_n_for_budget",
]

STRUCTURES = ("unstructured", "structured", "transposable", "sequential")

Real = Union[float, Fraction]


@dataclass(frozen=True)
class DiversityQuery:
    t: int
    cfg: NmConfig
    structure: str

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise NMSparseError(f"unknown structure {self.structure!r}; expected one of {STRUCTURES}")
        t, n, m = self.t, self.cfg.n, self.cfg.m
        if t < 1:
            raise DivisibilityError(f"tensor size must be positive, got {t}")
        if self.structure == "unstructured":
            if (n * t) % m:
                raise DivisibilityError(f"N*T/M = {n}*{t}/{m} is not integral")
        elif self.structure == "transposable":
            if t % (m * m):
                raise DivisibilityError(f"T = {t} is not divisible by M^2 = {m * m}")
        elif t % m:
            raise DivisibilityError(f"T = {t} is not divisible by M = {m}")


def mask_diversity(t: int, cfg: NmConfig, structure: str) -> int:
    """Exact number of masks of the given structure on a tensor of ``t`` elements."""
    q = DiversityQuery(t, cfg, structure)
    n, m = cfg.n, cfg.m
    if q.structure == "unstructured":
        return math.comb(t, n * t // m)
    if q.structure == "structured":
        return math.comb(m, n) ** (t // m)
    if q.structure == "transposable":
        per_tile = math.prod(math.factorial(m - k) for k in range(n))
        return per_tile ** (t // (m * m))
    return (m - n + 1) ** (t // m)


def diversity_table(t: int, configs) -> dict[str, dict[str, int]]:
    """``{structure: {"n:m": value}}`` for every structure and configuration."""
    return {
        s: {str(cfg): mask_diversity(t, cfg, s) for cfg in configs} for s in STRUCTURES
    }


def format_scientific(value: int, digits: int = 2) -> str:
    """Truncate a non-negative integer to ``digits`` significant figures, e.g. ``5.7e14``."""
    text = str(int(value))
    head = text[0] if digits <= 1 or len(text) == 1 else f"{text[0]}.{text[1:digits]}"
    return f"{head}e{len(text) - 1}"


def _check_rho(rho):
    if not 0 <= rho <= 1:
        raise NMSparseError(f"rho must be in [0, 1], got {rho}")


def _terms(rho: Real, m: int, lo: int, hi: int):
    return [math.comb(m, i) * rho**i * (1 - rho) ** (m - i) for i in range(lo, hi)]


def _total(terms, exact):
    return sum(terms, Fraction(0)) if exact else math.fsum(terms)


def sparse_probability(rho: Real, n: int, m: int) -> Real:
    """P(at least ``n`` of ``m`` i.i.d. entries are prunable), each with probability ``rho``.

    Exact when ``rho`` is a :class:`~fractions.Fraction`.
    """
    _check_rho(rho)
    if not 0 <= n <= m:
        raise NMSparseError(f"need 0 <= n <= m, got {n}:{m}")
    exact = isinstance(rho, Fraction)
    return _total(_terms(rho, m, n, m + 1), exact)


def violation_probability(rho: Real, n: int, m: int) -> Real:
    """Probability that a block is *not* n:m sparse.

    Summed from the lower tail directly rather than as ``1 - sparse`` so
    small violation rates keep their relative precision.
    """
    _check_rho(rho)
    if not 0 <= n <= m:
        raise NMSparseError(f"need 0 <= n <= m, got {n}:{m}")
    exact = isinstance(rho, Fraction)
    return _total(_terms(rho, m, 0, n), exact)


def phase_curve(rho: Real, m: int) -> list[tuple[float, Real]]:
    """``(n / m, sparse_probability)`` for ``n = 0 .. m``."""
    return [(k / m, sparse_probability(rho, k, m)) for k in range(m + 1)]


def transition_slope(rho: Real, m: int) -> float:
    """Central-difference slope of the phase curve at ``n / m`` nearest ``rho``."""
    k = min(max(round(float(rho) * m), 1), m - 1)
    upper = sparse_probability(rho, k + 1, m)
    lower = sparse_probability(rho, k - 1, m)
    return float(upper - lower) * m / 2


def select_n_for_budget(rho: Real, m: int, budget: float) -> int:
    """Largest ``n`` whose violation probability does not exceed ``budget``.

    ``n = 0`` never violates, so the scan always succeeds.
    """
    if not 0 < budget < 1:
        raise NMSparseError(f"budget must be in (0, 1), got {budget}")
    for n in range(m, -1, -1):
        if violation_probability(rho, n, m) <= budget:
            return n
    return 0
