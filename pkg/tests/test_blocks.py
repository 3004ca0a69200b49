import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SKEWED_D, chains
from rdbia.blocks import (
    MATERIALIZE_LIMIT,
    all_sequences,
    block_distribution,
    l1_distance,
    projected_distribution,
    seq_decode,
    seq_index,
)
from rdbia.chain import delta_tau, stationary, validate_chain
from rdbia.distortion import block_distortion, make_distortion
from rdbia.errors import BlockTooLarge, OutOfRange, ShapeMismatch


def path_probability(chain, s):
    """Oracle: product of the initial weight and transition entries along s."""
    p = chain.pi0[s[0]]
    for a, b in zip(s, s[1:]):
        p *= chain.P[a, b]
    return p


def marginalize(chain, T, tau):
    """Oracle: sum the block law over every dropped prefix."""
    m = chain.m
    out = np.zeros(m ** (T - tau))
    for s in itertools.product(range(m), repeat=T):
        out[seq_index(s[tau:], m)] += path_probability(chain, s)
    return out


def test_index_examples():
    assert seq_index((0, 0, 0), 2) == 0
    assert seq_index((1, 0, 1), 2) == 5
    assert seq_decode(5, 2, 3) == (1, 0, 1)
    for i in range(3**4):
        assert seq_index(seq_decode(i, 3, 4), 3) == i
    with pytest.raises(OutOfRange):
        seq_index((0, 2), 2)
    with pytest.raises(OutOfRange):
        seq_decode(8, 2, 3)


def test_all_sequences_order():
    seqs = all_sequences(3, 3)
    assert all(seq_index(row, 3) == i for i, row in enumerate(seqs))


def test_block_examples(demo):
    assert np.array_equal(block_distribution(demo, 1).probs, demo.pi0)
    assert np.allclose(block_distribution(demo, 2).probs, [0.9, 0.1, 0, 0], atol=1e-15)
    at_pi = demo.with_initial(stationary(demo))
    src = block_distribution(at_pi, 5)
    for j in range(5):
        assert np.allclose(src.coordinate_marginal(j), stationary(demo), atol=1e-14)


@pytest.mark.parametrize("tau", [1, 2])
def test_projection_matches_marginalization(demo, tau):
    got = projected_distribution(demo, 4, tau).probs
    assert np.max(np.abs(got - marginalize(demo, 4, tau))) <= 1e-12


def test_projection_trivial_cases(demo):
    assert np.array_equal(projected_distribution(demo, 4, 0).probs, block_distribution(demo, 4).probs)
    at_pi = demo.with_initial(stationary(demo))
    for tau in range(4):
        assert np.allclose(projected_distribution(at_pi, 5, tau).probs, block_distribution(at_pi, 5 - tau).probs, atol=1e-15)
    with pytest.raises(OutOfRange):
        projected_distribution(demo, 3, 3)


def test_l1_examples(demo):
    a = projected_distribution(demo, 4, 1)
    b = projected_distribution(demo.with_initial(stationary(demo)), 4, 1)
    assert l1_distance(a, b) == pytest.approx(0.3, abs=1e-12)
    assert l1_distance(a, a) == 0
    # exhaustive cross-check of the same number
    assert np.abs(marginalize(demo, 4, 1) - marginalize(demo.with_initial([0.75, 0.25]), 4, 1)).sum() == pytest.approx(0.3, abs=1e-12)
    u = validate_chain([[0.5, 0.5], [0.5, 0.5]], [1, 0])
    v = u.with_initial([0, 1])
    p1, p2 = block_distribution(u, 1), block_distribution(v, 1)
    assert l1_distance(p1, p2) == 2
    with pytest.raises(ShapeMismatch):
        l1_distance(block_distribution(u, 1), block_distribution(u, 2))


def test_budget_and_materialization(demo):
    with pytest.raises(BlockTooLarge):
        block_distribution(demo, 17)
    with pytest.raises(BlockTooLarge):
        block_distribution(demo, 5, budget=16)
    big = block_distribution(demo, 13)
    assert big.size > MATERIALIZE_LIMIT
    with pytest.raises(BlockTooLarge):
        big.distortion_matrix()
    spec = make_distortion(SKEWED_D)
    src = block_distribution(demo, 3, spec)
    dm = src.distortion_matrix()
    seqs = all_sequences(2, 3)
    for i, j in [(0, 7), (5, 2), (3, 3), (6, 1)]:
        assert dm[i, j] == block_distortion(spec, seqs[i], seqs[j]) == src.pair_distortion(i, j)
    assert big.pair_distortion(0, 2**13 - 1) == 13.0


def test_to_csv(tmp_path, demo):
    path = tmp_path / "q.csv"
    block_distribution(demo, 2).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "seq,index,prob"
    assert lines[1] == "00,0,0.9"
    assert len(lines) == 5


@settings(max_examples=40, deadline=None)
@given(chains(), st.integers(1, 6).flatmap(lambda T: st.tuples(st.just(T), st.integers(0, T - 1))))
def test_projection_and_l1_identity(ch, Tt):
    T, tau = Tt
    if ch.m**T > 729:
        T = 5
        tau = min(tau, T - 1)
    Qp = projected_distribution(ch, T, tau)
    assert np.max(np.abs(Qp.probs - marginalize(ch, T, tau))) <= 1e-12
    Q = projected_distribution(ch.with_initial(stationary(ch)), T, tau)
    assert l1_distance(Qp, Q) == pytest.approx(delta_tau(ch, tau), abs=1e-10)
    for src in (Qp, Q, block_distribution(ch, T)):
        assert np.all(src.probs >= 0)
        assert abs(src.probs.sum() - 1) <= 1e-10
