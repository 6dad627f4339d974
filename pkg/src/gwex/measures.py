"""Product occupancy laws, their Palm versions, and the rooted-sample samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel as K
from .errors import BadAlpha, BadDensity
from .offspring import OffspringDistribution
from .tree import AGW, LazyTree

BERNOULLI = "bernoulli"
DEGREE = "degree"

P_VARIABLE = "P^v"
P_CONSTANT = "P^c"
Q_VARIABLE = "Q^v"
Q_CONSTANT = "Q^c"


class Configuration:
    """0/1 occupancies over a LazyTree, revealed lazily from a product law.

    ``law`` is ``"bernoulli"`` (every site occupied with probability
    ``param``) or ``"degree"`` (site x occupied with probability
    param*deg(x) / (1 + param*deg(x))). The value at a node is a pure
    function of (config_seed, node key). With ``palm`` the root is occupied.
    """

    def __init__(self, tree: LazyTree, law: str, param: float, config_seed: int, palm: bool = True):
        if law not in (BERNOULLI, DEGREE):
            raise ValueError(f"unknown law {law!r}")
        self.tree = tree
        self.law = law
        self.param = float(param)
        self.config_seed = int(config_seed) & 0xFFFFFFFFFFFFFFFF
        self.palm = bool(palm)
        self.revealed: dict = {}

    @property
    def law_code(self) -> int:
        return K.BERNOULLI if self.law == BERNOULLI else K.DEGREE

    @property
    def is_empty(self) -> bool:
        """True when no site other than a Palm root can be occupied."""
        return self.param == 0.0

    def marginal(self, v) -> float:
        if v == self.tree.root and self.palm:
            return 1.0
        deg = self.tree.degree(v) if self.law == DEGREE else 0
        return float(K.occupancy_probability(self.law_code, self.param, deg))

    def occupancy(self, v) -> int:
        v = self.tree._check(v)
        hit = self.revealed.get(v)
        if hit is not None:
            return hit
        if self.law == DEGREE:
            self.tree.degree(v)  # forces the children to exist
        val = int(K.initial_occupancy(self.tree.nodes, self.tree.keys, self.tree.meta,
                                      self.tree.ks, self.tree.cdf, v, self.law_code,
                                      self.param, 1 if self.palm else 0,
                                      np.uint64(self.config_seed)))
        self.revealed[v] = val
        return val

    __getitem__ = occupancy

    def describe(self) -> dict:
        return {"law": self.law, "param": self.param, "palm": self.palm,
                "config_seed": self.config_seed}


@dataclass
class RootedSample:
    tree: LazyTree
    config: Configuration
    law: str
    seed: int
    attempts: int = 1

    @property
    def model(self) -> str:
        return "variable" if self.config.law == BERNOULLI else "constant"


def _check_rho(rho):
    if not (0.0 <= rho < 1.0):
        raise BadDensity(f"density must lie in [0, 1), got {rho!r}")


def _check_alpha(alpha, strict=False):
    ok = alpha > 0.0 if strict else alpha >= 0.0
    if not ok or not np.isfinite(alpha):
        raise BadAlpha(f"invalid alpha {alpha!r}")


def _build(d, seed, tilted, model, law, param, tag):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    ts, cs, attempts = K.sample_seeds(np.uint64(seed), tilted, model, float(param), d.ks, d.cdf)
    tree = LazyTree(d, AGW, int(ts))
    config = Configuration(tree, law, param, int(cs), palm=True)
    return RootedSample(tree, config, tag, seed, int(attempts))


def sample_p_variable(d: OffspringDistribution, rho: float, seed: int) -> RootedSample:
    _check_rho(rho)
    return _build(d, seed, False, K.VARIABLE, BERNOULLI, rho, P_VARIABLE)


def sample_p_constant(d: OffspringDistribution, alpha: float, seed: int) -> RootedSample:
    _check_alpha(alpha)
    return _build(d, seed, False, K.CONSTANT, DEGREE, alpha, P_CONSTANT)


def sample_q_variable(d: OffspringDistribution, rho: float, seed: int) -> RootedSample:
    """Unimodular tree by rejection (accept with 2/deg(o)), Bernoulli Palm colors."""
    _check_rho(rho)
    return _build(d, seed, True, K.VARIABLE, BERNOULLI, rho, Q_VARIABLE)


def sample_q_constant(d: OffspringDistribution, alpha: float, seed: int) -> RootedSample:
    """Root-degree tilt by rejection, accept with (2a+1)/(a*deg(o)+1)."""
    _check_alpha(alpha, strict=True)
    return _build(d, seed, True, K.CONSTANT, DEGREE, alpha, Q_CONSTANT)


def sample(d: OffspringDistribution, model: str, law: str, param: float, seed: int) -> RootedSample:
    """Dispatch on model ("variable"/"constant") and law ("P"/"Q")."""
    table = {
        ("variable", "P"): sample_p_variable,
        ("constant", "P"): sample_p_constant,
        ("variable", "Q"): sample_q_variable,
        ("constant", "Q"): sample_q_constant,
    }
    return table[(model, law)](d, param, seed)
