"""A-priori parameter choice rules: alpha(delta) and network sizing m(delta).

The sizing rule turns a noise level into a concrete architecture budget:
a depth that depends only on the smoothness beta and input dimension d, a
total neuron count growing like delta^(-2d/(3 beta)), and a weight-box
half-width growing strictly slower than delta^(-2s/3) (realized here by
dividing by log(1/delta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class RateParams:
    """Inputs of the sizing rule.

    mu is the source-condition exponent in [1/2, 1]; beta > 0 the assumed
    smoothness of the solution; d the input dimension; s a positive
    integer exponent of the weight-bound rule; c_alpha and c_neurons the
    proportionality constants of the two rules.
    """

    mu: float = 1.0
    beta: float = 1.0
    d: int = 2
    s: int = 1
    c_alpha: float = 1.0
    c_neurons: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.mu <= 1.0:
            raise ValueError(f"mu must be in [1/2, 1], got {self.mu}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.d < 1 or self.s < 1:
            raise ValueError("d and s must be positive integers")
        if self.c_alpha <= 0 or self.c_neurons <= 0:
            raise ValueError("proportionality constants must be positive")


def alpha_of_delta(delta, rule="holder", mu=None, constant=1.0):
    """Regularization weight from the noise level.

    rule="proportional" gives constant * delta; rule="holder" gives
    constant * delta^(2 / (2 mu + 1)), which balances the worst-case error
    terms under the source condition with exponent mu.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if rule == "proportional":
        return constant * delta
    if rule == "holder":
        if mu is None:
            raise ValueError("holder rule requires mu")
        if not 0.5 <= mu <= 1.0:
            raise ValueError(f"mu must be in [1/2, 1], got {mu}")
        return constant * delta ** (2.0 / (2.0 * mu + 1.0))
    raise ValueError(f"unknown rule {rule!r}; expected 'proportional' or 'holder'")


@dataclass(frozen=True)
class NetworkSize:
    """Architecture budget produced by :func:`network_size_of_delta`."""

    depth: int
    total_neurons: int
    weight_bound: float
    hidden_widths: tuple[int, ...]


def network_size_of_delta(delta, rp: RateParams) -> NetworkSize:
    """Network sizing for noise level delta in (0, 1/2).

    depth = ceil(7 + (1 + ceil(log2 beta)) (11 + beta d)) counts all
    layers and is independent of delta; total_neurons =
    ceil(c_neurons * delta^(-2d/(3 beta))) is distributed as evenly as
    possible over the depth - 1 hidden layers (each at least 1 wide);
    weight_bound = delta^(-2s/3) / log(1/delta).
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must be in (0, 1/2), got {delta}")
    depth = math.ceil(7 + (1 + math.ceil(math.log2(rp.beta))) * (11 + rp.beta * rp.d))
    total_neurons = math.ceil(rp.c_neurons * delta ** (-2.0 * rp.d / (3.0 * rp.beta)))
    weight_bound = delta ** (-2.0 * rp.s / 3.0) / math.log(1.0 / delta)

    n_hidden = depth - 1
    base, extra = divmod(total_neurons, n_hidden)
    widths = tuple(max(1, base + (1 if i < extra else 0)) for i in range(n_hidden))
    return NetworkSize(
        depth=depth,
        total_neurons=total_neurons,
        weight_bound=weight_bound,
        hidden_widths=widths,
    )
