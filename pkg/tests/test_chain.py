import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEMO_P, chains, distributions, positive_matrices
from rdbia.chain import (
    chain_from_json,
    delta_tau,
    matrix_power,
    primitivity_exponent,
    stationary,
    t_step_distribution,
    validate_chain,
)
from rdbia.errors import BadInitial, NotPrimitive, NotStochastic


def eig_stationary(P):
    """Independent oracle: left Perron eigenvector."""
    w, v = np.linalg.eig(np.asarray(P).T)
    x = np.real(v[:, np.argmin(np.abs(w - 1))])
    return x / x.sum()


def test_uniform_matrix_is_valid():
    ch = validate_chain([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.5])
    assert ch.m == 2
    assert ch.states == (0, 1)


@pytest.mark.parametrize("P", [[[0, 1], [1, 0]], [[1, 0], [0, 1]]])
def test_not_primitive(P):
    with pytest.raises(NotPrimitive):
        validate_chain(P, [0.5, 0.5])


@pytest.mark.parametrize(
    "P,pi0,exc",
    [
        ([[0.5, 0.6], [0.5, 0.5]], [1, 0], NotStochastic),
        ([[1.5, -0.5], [0.5, 0.5]], [1, 0], NotStochastic),
        ([[0.5, 0.5]], [1], NotStochastic),
        ([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.6], BadInitial),
        ([[0.5, 0.5], [0.5, 0.5]], [1, 0, 0], BadInitial),
        ([[0.5, 0.5], [0.5, 0.5]], [1.5, -0.5], BadInitial),
    ],
)
def test_rejects_bad_input(P, pi0, exc):
    with pytest.raises(exc):
        validate_chain(P, pi0)


def test_primitivity_exponent_values():
    assert primitivity_exponent([[0.5, 0.5], [0.5, 0.5]]) == 1
    # 0 -> 1 -> {0, 1}: needs two steps
    assert primitivity_exponent([[0, 1], [0.5, 0.5]]) == 2
    # Wielandt's extremal 3-state matrix attains (m - 1)^2 + 1 = 5
    W = [[0, 1, 0], [0, 0, 1], [0.5, 0.5, 0]]
    assert primitivity_exponent(W) == 5
    assert primitivity_exponent([[0, 1, 0], [0, 0, 1], [1, 0, 0]]) is None


def test_stationary_examples():
    assert np.allclose(stationary(validate_chain([[0.5, 0.5], [0.5, 0.5]], [1, 0])), [0.5, 0.5])
    assert np.allclose(stationary(validate_chain(DEMO_P, [1, 0])), [0.75, 0.25], atol=1e-15)
    doubly = [[0.2, 0.3, 0.5], [0.5, 0.2, 0.3], [0.3, 0.5, 0.2]]
    assert np.allclose(stationary(validate_chain(doubly, [1, 0, 0])), [1 / 3] * 3, atol=1e-14)


def test_t_step_examples(demo):
    assert np.array_equal(t_step_distribution(demo, 0), demo.pi0)
    assert np.allclose(t_step_distribution(demo, 1), [0.9, 0.1], atol=1e-15)
    pi = stationary(demo)
    at_pi = demo.with_initial(pi)
    for tau in (0, 1, 5, 40):
        assert np.allclose(t_step_distribution(at_pi, tau), pi, atol=1e-14)


def test_delta_examples(demo):
    assert delta_tau(demo, 0) == pytest.approx(0.5, abs=1e-14)
    assert delta_tau(demo, 1) == pytest.approx(0.3, abs=1e-14)
    # |lambda_2| = 0.6 for the demo chain, so delta decays geometrically by 0.6
    for tau in range(1, 12):
        assert delta_tau(demo, tau) == pytest.approx(0.5 * 0.6**tau, rel=1e-9, abs=1e-15)
    at_pi = demo.with_initial(stationary(demo))
    assert all(delta_tau(at_pi, t) < 1e-14 for t in range(10))


def test_chain_from_json():
    ch = chain_from_json({"P": DEMO_P, "pi0": [0, 1], "states": ["a", "b"]})
    assert ch.states == ("a", "b")
    with pytest.raises(NotStochastic):
        chain_from_json({"P": DEMO_P})


def test_with_initial_revalidates(demo):
    with pytest.raises(BadInitial):
        demo.with_initial([0.2, 0.2])


@given(st.integers(2, 4).flatmap(lambda m: positive_matrices(m)), st.integers(0, 60))
def test_matrix_power_matches_numpy(P, k):
    assert np.allclose(matrix_power(P, k), np.linalg.matrix_power(P, k), atol=1e-12)


@given(chains())
def test_stationary_matches_eigenvector(ch):
    pi = stationary(ch)
    assert np.allclose(pi, eig_stationary(ch.P), atol=1e-10)
    assert np.allclose(pi @ ch.P, pi, atol=1e-12)


@given(chains(m=3), distributions(3))
def test_stationary_independent_of_initial(ch, other):
    assert np.allclose(stationary(ch), stationary(ch.with_initial(other)), atol=1e-12, rtol=0)


@given(chains(), st.integers(0, 500))
def test_t_step_is_distribution(ch, tau):
    p = t_step_distribution(ch, tau)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) < 1e-10


# Entries >= 0.15 keep |lambda_2| <= 0.7; near-periodic matrices such as
# [[0.02, 0.98], [0.98, 0.02]] mix far too slowly for a fixed horizon of 50.
@settings(max_examples=50)
@given(positive_matrices(2, low=0.15), distributions(2))
def test_delta_decays(P, pi0):
    ch = validate_chain(P, pi0)
    assert delta_tau(ch, 10 * ch.m) < delta_tau(ch, 0) + 1e-12
    assert delta_tau(ch, 50) < 1e-6
