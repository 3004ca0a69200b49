import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEMO_P, SKEWED_D, distributions
from rdbia.blocks import block_distribution
from rdbia.chain import stationary, validate_chain
from rdbia.distortion import hamming, make_distortion
from rdbia.errors import AlphabetTooLarge, InvalidCurve, NoConvergence
from rdbia.rdsolver import (
    AdditiveSource,
    RDCurve,
    RDPoint,
    ba_point,
    binary_entropy,
    brute_force_rd,
    d_zero,
    entropy,
    full_distortion_matrix,
    rd_at_distortion,
    rd_curve,
    validate_curve,
)

HAM2 = 1.0 - np.eye(2)


def binary_source(p1, d=HAM2):
    return AdditiveSource(np.array([1 - p1, p1]), [np.asarray(d, float)])


def closed_form(D, p=0.5):
    """R(D) = h(p) - h(D) for a Bernoulli(p) source under Hamming distortion."""
    return max(0.0, binary_entropy(p) - binary_entropy(D)) if D < min(p, 1 - p) else 0.0


def test_entropy_examples():
    assert entropy([0.5, 0.5]) == 1.0
    assert entropy([1.0, 0.0]) == 0.0
    assert entropy([0.75, 0.25]) == pytest.approx(0.8112781244591328, abs=1e-15)


def test_d_zero_examples():
    assert d_zero(binary_source(0.5)) == 0.5
    assert d_zero(binary_source(0.0)) == 0.0
    assert d_zero(binary_source(0.25)) == 0.25


def test_full_distortion_matrix_is_kron_sum():
    src = block_distribution(validate_chain(DEMO_P, [1, 0]), 3, make_distortion(SKEWED_D))
    assert np.array_equal(full_distortion_matrix(src), src.distortion_matrix())


@pytest.mark.parametrize("D", [0.05, 0.11, 0.25, 0.4])
def test_closed_form_binary(D):
    pt = rd_at_distortion(binary_source(0.5), D)
    assert pt.R == pytest.approx(closed_form(D), abs=1e-6)
    assert pt.D == D


@pytest.mark.parametrize("p", [0.1, 0.3])
def test_closed_form_biased(p):
    for D in (0.02, 0.05, 0.09):
        assert rd_at_distortion(binary_source(p), D).R == pytest.approx(closed_form(D, p), abs=1e-6)


def test_zero_rate_region():
    assert rd_at_distortion(binary_source(0.5), 0.5).R == 0
    assert rd_at_distortion(binary_source(0.5), 0.7).R == 0
    with pytest.raises(ValueError):
        rd_at_distortion(binary_source(0.5), 0.0)


def test_ba_point_on_closed_form_curve():
    for s in (-0.5, -2.0, -5.0):
        pt = ba_point(binary_source(0.5), s)
        assert pt.R == pytest.approx(1 - binary_entropy(pt.D), abs=1e-6)
        # slope of 1 - h(D) is log((D / (1 - D))) in nats
        assert math.log(pt.D / (1 - pt.D)) == pytest.approx(s, abs=1e-6)


def test_ba_point_endpoints():
    src = binary_source(0.5)
    steep = ba_point(src, -50.0)
    assert steep.D < 1e-3 and steep.R == pytest.approx(1.0, abs=1e-3)
    demo = block_distribution(validate_chain(DEMO_P, [0, 1]), 4, make_distortion(SKEWED_D))
    for source in (src, demo, binary_source(0.2, SKEWED_D)):
        flat = ba_point(source, -1e-9)
        assert abs(flat.D - d_zero(source)) < 1e-6 and flat.R < 1e-6
    with pytest.raises(ValueError):
        ba_point(src, 0.0)


def test_no_convergence_reports_gap():
    src = block_distribution(validate_chain(DEMO_P, [1, 0]), 6)
    with pytest.raises(NoConvergence) as info:
        ba_point(src, -3.0, tol=1e-15, max_iters=3, polish=False)
    assert info.value.gap > 0


def test_log_domain_agrees_with_dense():
    src = block_distribution(validate_chain(DEMO_P, [0.2, 0.8]), 6, make_distortion(SKEWED_D))
    for s in (-0.3, -2.0, -8.0):
        a = ba_point(src, s, log_domain=False)
        b = ba_point(src, s, log_domain=True)
        assert a.D == pytest.approx(b.D, abs=1e-7)
        assert a.R == pytest.approx(b.R, abs=1e-7)


def test_polish_agrees_with_plain_iteration():
    src = block_distribution(validate_chain(DEMO_P, [1, 0]), 3)
    a = ba_point(src, -2.0, tol=1e-10, polish=True)
    b = ba_point(src, -2.0, tol=1e-10, polish=False, max_iters=200000)
    assert a.R == pytest.approx(b.R, abs=1e-8)
    assert a.D == pytest.approx(b.D, abs=1e-8)


def test_tensorization_iid_chain():
    """Identical rows make the chain i.i.d., so R_{X^3}(3D) = 3 R_X(D)."""
    chain = validate_chain([[0.7, 0.3], [0.7, 0.3]], [0.7, 0.3])
    spec = make_distortion(SKEWED_D)
    single = block_distribution(chain, 1, spec)
    triple = block_distribution(chain, 3, spec)
    for D in (0.05, 0.1, 0.2):
        r1 = rd_at_distortion(single, D).R
        r3 = rd_at_distortion(triple, 3 * D).R
        assert r3 == pytest.approx(3 * r1, abs=1e-4)
        assert r1 == pytest.approx(brute_force_rd(single, D), abs=0.02)


def test_entropy_endpoint():
    chain = validate_chain(DEMO_P, [1, 0])
    chain = chain.with_initial(stationary(chain))
    for T in (1, 3, 5):
        src = block_distribution(chain, T)
        assert rd_at_distortion(src, T * 1e-6).R / T == pytest.approx(entropy(src.probs) / T, abs=5e-3)


def test_curve_matches_closed_form_and_has_zero_tail():
    grid = [0.05, 0.1, 0.2, 0.3, 0.45, 0.5, 0.6]
    curve = rd_curve(binary_source(0.5), grid)
    for D, R in zip(curve.D, curve.R):
        assert R == pytest.approx(closed_form(D), abs=1e-4)
    assert list(curve.R[-2:]) == [0.0, 0.0]
    with pytest.raises(ValueError):
        rd_curve(binary_source(0.5), [0.2, 0.1])


def test_validate_curve_rejects():
    pts = lambda Rs: RDCurve([RDPoint(D, R, -1.0, 1, 0.0) for D, R in zip([0.1, 0.2, 0.3], Rs)])
    validate_curve(pts([1.0, 0.5, 0.1]))
    with pytest.raises(InvalidCurve):
        validate_curve(pts([0.5, 0.6, 0.1]))
    with pytest.raises(InvalidCurve):
        validate_curve(pts([1.0, 0.9, 0.1]))


def test_curve_csv(tmp_path):
    curve = rd_curve(binary_source(0.5), [0.1, 0.6])
    path = tmp_path / "c.csv"
    curve.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "D,R_bits,slope,iters,gap"
    assert rows[2].startswith("0.6,0,")


def test_brute_force_examples():
    assert brute_force_rd(binary_source(0.5), 0.6) == 0
    assert brute_force_rd(binary_source(0.5), 0.25) == pytest.approx(closed_form(0.25), abs=0.02)
    three = AdditiveSource(np.array([0.5, 0.3, 0.2]), [1 - np.eye(3)])
    assert brute_force_rd(three, 0.2, grid_step=0.05) == pytest.approx(rd_at_distortion(three, 0.2).R, abs=0.05)
    with pytest.raises(AlphabetTooLarge):
        brute_force_rd(block_distribution(validate_chain(DEMO_P, [1, 0]), 2), 0.1)


@settings(max_examples=8, deadline=None)
@given(distributions(2, min_value=0.05), st.sampled_from([HAM2, SKEWED_D, [[0, 1.5], [0.7, 0]]]),
       st.floats(0.2, 0.9))
def test_oracle_equivalence(p, d, frac):
    src = AdditiveSource(p, [np.asarray(d, float)])
    D = frac * d_zero(src)
    assert rd_at_distortion(src, D).R == pytest.approx(brute_force_rd(src, D), abs=0.02)


@settings(max_examples=15, deadline=None)
@given(distributions(4, min_value=0.01), st.integers(0, 2**31))
def test_curve_invariants(p, seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(0.2, 3.0, size=(2, 2))
    np.fill_diagonal(d, 0)
    src = AdditiveSource(p, [d, d])
    dz = d_zero(src)
    grid = np.linspace(0.05, 1.2, 8) * dz
    curve = rd_curve(src, grid)
    R = curve.R
    assert np.all(R >= 0)
    assert np.all(R <= entropy(p) + 1e-6)
    assert np.all(np.diff(R) <= 1e-6)
    assert np.all(R[grid >= dz] == 0)
