import numpy as np
import pytest

from compact_tik.rules import NetworkSize, RateParams, alpha_of_delta, network_size_of_delta


def test_alpha_proportional():
    assert alpha_of_delta(0.1, rule="proportional") == 0.1
    assert alpha_of_delta(0.1, rule="proportional", constant=3.0) == pytest.approx(0.3)


def test_alpha_holder_mu_one():
    # delta^(2/3) at delta = 1e-3
    assert alpha_of_delta(1e-3, rule="holder", mu=1.0) == pytest.approx(1e-2)


def test_alpha_holder_mu_half():
    # exponent 2/(2*0.5+1) = 1, so alpha = C * delta
    assert alpha_of_delta(1e-4, rule="holder", mu=0.5, constant=2.0) == pytest.approx(2e-4)


def test_alpha_validation():
    with pytest.raises(ValueError):
        alpha_of_delta(0.0, rule="proportional")
    with pytest.raises(ValueError):
        alpha_of_delta(0.1, rule="unknown")
    with pytest.raises(ValueError):
        alpha_of_delta(0.1, rule="holder")
    with pytest.raises(ValueError):
        alpha_of_delta(0.1, rule="holder", mu=2.0)


def test_alpha_strictly_increasing_and_homogeneous():
    deltas = np.logspace(-8, -1, 30)
    for rule, mu in (("proportional", None), ("holder", 1.0), ("holder", 0.5)):
        values = [alpha_of_delta(d, rule=rule, mu=mu) for d in deltas]
        assert all(b > a for a, b in zip(values, values[1:]))
        scaled = [alpha_of_delta(d, rule=rule, mu=mu, constant=7.5) for d in deltas]
        assert np.allclose(scaled, 7.5 * np.array(values), rtol=1e-15)


def test_rate_params_validation():
    with pytest.raises(ValueError):
        RateParams(mu=0.2)
    with pytest.raises(ValueError):
        RateParams(beta=0.0)
    with pytest.raises(ValueError):
        RateParams(s=0)


def test_depth_formula_beta1_d2():
    # 7 + (1 + ceil(log2 1)) (11 + 1*2) = 7 + 13 = 20
    size = network_size_of_delta(0.1, RateParams(beta=1.0, d=2))
    assert size.depth == 20


def test_total_neurons_beta1_d2():
    # ceil(0.1^(-4/3)) = ceil(21.54) = 22
    size = network_size_of_delta(0.1, RateParams(beta=1.0, d=2, c_neurons=1.0))
    assert size.total_neurons == 22


def test_depth_independent_of_delta():
    rp = RateParams(beta=2.5, d=3)
    depths = {network_size_of_delta(d, rp).depth for d in (0.4, 0.1, 1e-3, 1e-6)}
    assert len(depths) == 1


def test_sizes_nondecreasing_as_delta_shrinks():
    # the log factor in the weight bound dominates only below e^(-3/(2s)),
    # so monotonicity is checked from 0.2 downward
    rp = RateParams(beta=1.0, d=2, s=1)
    deltas = [0.2, 0.1, 0.01, 1e-3, 1e-4]
    sizes = [network_size_of_delta(d, rp) for d in deltas]
    for a, b in zip(sizes, sizes[1:]):
        assert b.total_neurons >= a.total_neurons
        assert b.weight_bound >= a.weight_bound


def test_weight_bound_is_little_o():
    # weight_bound(delta) * delta^(2s/3) -> 0 along a decreasing grid
    rp = RateParams(s=2)
    products = [
        network_size_of_delta(d, rp).weight_bound * d ** (2.0 * rp.s / 3.0)
        for d in np.logspace(-1, -7, 7)
    ]
    assert all(b < a for a, b in zip(products, products[1:]))
    assert products[-1] < 0.1


def test_hidden_widths_partition():
    size = network_size_of_delta(0.1, RateParams(beta=1.0, d=2))
    assert len(size.hidden_widths) == size.depth - 1
    assert sum(size.hidden_widths) == size.total_neurons
    assert max(size.hidden_widths) - min(size.hidden_widths) <= 1


def test_hidden_widths_at_least_one():
    # very mild delta: fewer neurons than hidden layers, widths clamp to 1
    size = network_size_of_delta(0.45, RateParams(beta=1.0, d=2))
    assert all(w >= 1 for w in size.hidden_widths)


def test_delta_domain():
    rp = RateParams()
    with pytest.raises(ValueError):
        network_size_of_delta(0.5, rp)
    with pytest.raises(ValueError):
        network_size_of_delta(0.0, rp)
    assert isinstance(network_size_of_delta(0.49, rp), NetworkSize)
