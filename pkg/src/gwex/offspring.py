"""Offspring laws and the closed-form speeds that depend on them alone."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadAlpha, BadDensity, BadPMF, Subcritical, ZeroKey

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class OffspringDistribution:
    """Finite-support progeny law with no mass at zero and mean above one.

    ``support`` holds ``(k, p_k)`` pairs sorted by ``k``. Build instances with
    :func:`new_offspring`, which validates and normalizes.
    """

    support: tuple
    mean: float = field(compare=False)

    @property
    def ks(self) -> np.ndarray:
        return np.array([k for k, _ in self.support], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support], dtype=np.float64)

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    @property
    def max_k(self) -> int:
        return self.support[-1][0]

    @property
    def is_degenerate(self) -> bool:
        return len(self.support) == 1

    def expect(self, f) -> float:
        """E[f(Z)] summed exactly over the support."""
        return math.fsum(p * f(k) for k, p in self.support)

    def as_dict(self) -> dict:
        return {k: p for k, p in self.support}

    def __repr__(self):
        body = ", ".join(f"{k}: {p:g}" for k, p in self.support)
        return f"OffspringDistribution({{{body}}})"


def new_offspring(pmf) -> OffspringDistribution:
    """Validate a pmf given as a mapping or a list of ``(k, p)`` pairs."""
    items = list(pmf.items()) if hasattr(pmf, "items") else list(pmf)
    if not items:
        raise BadPMF("empty pmf")
    seen = set()
    clean = []
    for k, p in items:
        if isinstance(k, bool) or int(k) != k:
            raise BadPMF(f"non-integer key {k!r}")
        k = int(k)
        p = float(p)
        if k in seen:
            raise BadPMF(f"duplicate key {k}")
        seen.add(k)
        if not math.isfinite(p) or p < 0:
            raise BadPMF(f"bad probability {p!r} at {k}")
        if k == 0 and p > 0:
            raise ZeroKey("mass at k = 0 is not allowed")
        if k < 0:
            raise BadPMF(f"negative key {k}")
        if p > 0:
            clean.append((k, p))
    if not clean:
        raise BadPMF("no positive mass")
    total = math.fsum(p for _, p in clean)
    if abs(total - 1.0) > _NORM_TOL:
        raise BadPMF(f"probabilities sum to {total!r}")
    clean = tuple(sorted((k, p / total) for k, p in clean))
    mean = math.fsum(k * p for k, p in clean)
    if mean <= 1.0:
        raise Subcritical(f"mean {mean} <= 1")
    return OffspringDistribution(support=clean, mean=mean)


def _check_rho(rho):
    if not (0.0 <= rho < 1.0):
        raise BadDensity(f"density must lie in [0, 1), got {rho!r}")


def _check_alpha(alpha):
    if not (alpha >= 0.0) or math.isinf(alpha):
        raise BadAlpha(f"alpha must be a finite non-negative number, got {alpha!r}")


def mean_escape(d: OffspringDistribution) -> float:
    """E[(Z-1)/(Z+1)], the single-walker speed at unit total rate."""
    return d.expect(lambda k: (k - 1) / (k + 1))


def speed_variable(d: OffspringDistribution, rho: float) -> float:
    _check_rho(rho)
    return (1.0 - rho) * mean_escape(d) / d.expect(lambda k: 1.0 / (k + 1))


def speed_constant(d: OffspringDistribution, alpha: float) -> float:
    _check_alpha(alpha)
    return d.expect(lambda k: (k - 1) / (k + 1) / (alpha * (k + 1) + 1))


def constant_speed_bound(d: OffspringDistribution, alpha: float) -> float:
    """Product of the two marginal expectations; dominates speed_constant."""
    _check_alpha(alpha)
    return mean_escape(d) * d.expect(lambda k: 1.0 / (alpha * (k + 1) + 1))


def ugw_root_degree_pmf(d: OffspringDistribution) -> list:
    w = [(k + 1, p / (k + 1)) for k, p in d.support]
    z = math.fsum(x for _, x in w)
    return [(deg, x / z) for deg, x in w]


def tilted_root_degree_pmf(d: OffspringDistribution, alpha: float) -> list:
    """Root degree law with weights p_{k-1}/(alpha*k + 1)."""
    _check_alpha(alpha)
    w = [(k + 1, p / (alpha * (k + 1) + 1)) for k, p in d.support]
    z = math.fsum(x for _, x in w)
    return [(deg, x / z) for deg, x in w]
