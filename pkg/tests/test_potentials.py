import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaplab import potentials as P
from gaplab.potentials import PotentialSpec, WindowChain

finite = st.floats(min_value=-50.0, max_value=50.0,
                   allow_nan=False, allow_infinity=False)
term = st.tuples(st.floats(min_value=-5.0, max_value=5.0),
                 st.floats(min_value=0.01, max_value=3.0),
                 st.floats(min_value=-math.pi, max_value=math.pi))


def test_zero_potential_evaluates_to_zero():
    assert P.evaluate(PotentialSpec.zero(), 3.7, 1.2) == 0.0


def test_cosine_at_origin_is_amplitude():
    spec = PotentialSpec.cosine_sum([(2.0, 1.0 / (2 * math.pi), 0.0)])
    assert P.evaluate(spec, 0.0, 0.0) == 2.0


def test_translate_identity_example():
    spec = PotentialSpec.cosine_sum([(1.0, 0.5, 0.3)])
    assert P.evaluate(spec, 1.1, 0.4) == P.evaluate(spec, 1.1 + 0.4, 0.0)


@given(x=finite, xi=finite, terms=st.lists(term, min_size=1, max_size=4))
@settings(max_examples=150, deadline=None)
def test_translate_identity_bit_for_bit(x, xi, terms):
    spec = PotentialSpec.cosine_sum(terms)
    assert P.evaluate(spec, x, xi) == P.evaluate(spec, x + xi, 0.0)


@given(x=finite, xi=finite, terms=st.lists(term, min_size=1, max_size=4))
@settings(max_examples=150, deadline=None)
def test_amplitude_and_slope_bounds(x, xi, terms):
    spec = PotentialSpec.cosine_sum(terms)
    assert abs(P.evaluate(spec, x, xi)) <= P.amplitude_bound(spec) + 1e-12
    assert abs(P.derivative(spec, x, xi)) <= P.slope_bound(spec) + 1e-12


def test_zero_derivative():
    assert P.derivative(PotentialSpec.zero(), 17.3, -2.0) == 0.0


def test_cosine_derivative_vanishes_at_origin():
    spec = PotentialSpec.cosine_sum([(1.0, 0.7, 0.0)])
    assert P.derivative(spec, 0.0, 0.0) == 0.0


def test_derivative_matches_central_difference():
    spec = PotentialSpec.cosine_sum([(1.0, 0.5, 0.3)])
    x, h = 0.9, 1e-5
    fd = (P.evaluate(spec, x + h) - P.evaluate(spec, x - h)) / (2 * h)
    exact = P.derivative(spec, x)
    assert abs(fd - exact) / abs(exact) < 1e-8


@given(x=finite)
@settings(max_examples=80, deadline=None)
def test_derivative_fd_oracle_property(x):
    spec = PotentialSpec.cosine_sum([(1.5, 0.4, 0.2), (-0.7, 1.1, 1.0)])
    h = 1e-5
    fd = (P.evaluate(spec, x + h) - P.evaluate(spec, x - h)) / (2 * h)
    assert abs(fd - P.derivative(spec, x)) < 1e-6


def test_rationally_related_frequencies_are_periodic():
    # frequencies 2/3 and 1/3 per unit length: common period 3
    spec = PotentialSpec.cosine_sum([(1.0, 2.0 / 3.0, 0.1),
                                     (0.5, 1.0 / 3.0, -0.4)])
    xs = np.linspace(-7.0, 7.0, 101)
    a = P.evaluate(spec, xs)
    b = P.evaluate(spec, xs + 3.0)
    assert np.allclose(a, b, atol=1e-12)


def test_mean_value_zero_frequency_term():
    spec = PotentialSpec.cosine_sum([(2.0, 0.0, 0.5)])
    assert P.mean_value(spec, -4.0, 9.0) == pytest.approx(2.0 * math.cos(0.5))


def test_mean_value_oscillation_averages_out():
    spec = PotentialSpec.cosine_sum([(1.0, 1.0, 0.0)])
    assert abs(P.mean_value(spec, -50.0, 50.0)) < 1e-2
    assert P.mean_value(spec, 0.0, 1.0) == pytest.approx(0.0, abs=1e-14)


def test_translate_spec_matches_offset_evaluation():
    spec = PotentialSpec.cosine_sum([(1.0, 0.31, 0.2), (0.4, 0.77, -1.0)])
    moved = P.translate(spec, 2.5)
    xs = np.linspace(-3.0, 3.0, 41)
    assert np.allclose(P.evaluate(moved, xs), P.evaluate(spec, xs, 2.5),
                       atol=1e-12)


def test_scalar_evaluator_agrees_with_evaluate():
    spec = PotentialSpec.cosine_sum([(1.0, 0.31, 0.2), (0.4, 0.77, -1.0)])
    f = P.scalar_evaluator(spec, xi=0.7)
    for x in (-2.0, 0.0, 1.3, 5.5):
        assert f(x) == pytest.approx(P.evaluate(spec, x, 0.7), abs=1e-14)


def test_potential_validation():
    with pytest.raises(ValueError):
        PotentialSpec("squarewell")
    with pytest.raises(ValueError):
        PotentialSpec("cosine_sum", ())
    with pytest.raises(ValueError):
        PotentialSpec("zero", ((1.0, 1.0, 0.0),))


def test_geometric_chain_matches_definition():
    chain = WindowChain.geometric()
    assert len(chain) == 8
    a0, b0 = chain.windows[0]
    assert (a0, b0) == (-25.0, 25.0)
    for n, (a, b) in enumerate(chain.windows):
        assert b == pytest.approx(25.0 * 1.6 ** n)
        assert a == pytest.approx(-25.0 * 1.6 ** n)


@given(half=st.floats(min_value=0.5, max_value=40.0),
       ratio=st.floats(min_value=1.05, max_value=3.0),
       count=st.integers(min_value=1, max_value=10))
@settings(max_examples=60, deadline=None)
def test_geometric_chain_invariants(half, ratio, count):
    chain = WindowChain.geometric(half, ratio, count)
    for (a0, b0), (a1, b1) in zip(chain.windows, chain.windows[1:]):
        assert a1 <= a0 and b0 <= b1
    for a, b in chain.windows:
        assert b > a


def test_chain_validation_rejects_non_nested():
    with pytest.raises(ValueError):
        WindowChain(((-1.0, 1.0), (-0.5, 2.0)))
    with pytest.raises(ValueError):
        WindowChain(((1.0, 1.0),))
    with pytest.raises(ValueError):
        WindowChain(())
