import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import plain_decoy_optimum, plain_decoy_rate

from homcert.keyrate import (
    ChannelModel,
    Intensities,
    IntensityGrid,
    binary_entropy,
    channel_transmittance,
    corrected_delta,
    corrected_e1,
    decoy_bounds,
    distance_scan,
    gain_qber,
    key_rate,
    max_distance,
    optimize_key_rate,
    resolve_delta,
)
from homcert.leakage import imbalance_uniform

MODEL = ChannelModel()
COARSE = IntensityGrid(signal_step=0.05, decoy_step=0.05)


def stats_at(distance, intensities, model=MODEL):
    eta = math.prod(channel_transmittance(distance, model))
    return (
        gain_qber(intensities.signal, eta, model),
        gain_qber(intensities.decoy, eta, model),
        gain_qber(0.0, eta, model),
        eta,
    )


def test_channel_model_validation():
    with pytest.raises(ValueError):
        ChannelModel(f_ec=0.9)
    with pytest.raises(ValueError):
        ChannelModel(optical_error=1.5)
    with pytest.raises(ValueError):
        ChannelModel(alpha_db_per_km=-0.1)
    with pytest.raises(ValueError):
        ChannelModel(detector_efficiency=0.0)


def test_intensities_validation():
    with pytest.raises(ValueError):
        Intensities(0.5, 0.5)
    with pytest.raises(ValueError):
        Intensities(0.5, 0.0)
    assert Intensities(0.5, 0.1).vacuum == 0.0


def test_channel_transmittance():
    eta_ch, eta_bob = channel_transmittance(0.0, MODEL)
    assert eta_ch == 1.0
    assert eta_bob == pytest.approx(0.12529680840681807, rel=1e-14)
    assert channel_transmittance(50.0, MODEL)[0] == pytest.approx(0.1, rel=1e-14)
    assert math.prod(channel_transmittance(1e4, MODEL)) < 1e-190
    with pytest.raises(ValueError):
        channel_transmittance(-1.0, MODEL)


def test_gain_qber_limits():
    assert gain_qber(0.0, 0.1, MODEL) == (MODEL.dark_count_prob, MODEL.e0)
    q, e = gain_qber(1e6, 1.0, MODEL)
    assert q == pytest.approx(1 + MODEL.dark_count_prob)
    assert e == pytest.approx((0.5e-5 + 0.01) / (1 + 1e-5))
    q, e = gain_qber(0.0, 0.1, ChannelModel(dark_count_prob=0.0))
    assert (q, e) == (0.0, 0.5)


def test_gain_qber_golden_50km():
    # 40-digit evaluation of the loss model at I = 0.5, 50 km
    eta = math.prod(channel_transmittance(50.0, MODEL))
    q, e = gain_qber(0.5, eta, MODEL)
    assert q == pytest.approx(0.0062552572241356869, rel=1e-13)
    assert e == pytest.approx(0.010783341088052067, rel=1e-13)


def test_decoy_bounds_perfect_channel():
    model = ChannelModel(alpha_db_per_km=0.0, bob_loss_db=0.0, detector_efficiency=1.0,
                         optical_error=0.0, dark_count_prob=0.0)
    # eta = 1 gives Y_n = 1 for every n >= 1; the two-intensity bound is tight
    # only as the intensities vanish
    previous = 0.0
    for scale in (1.0, 0.1, 0.01, 0.001):
        ints = Intensities(0.5 * scale, 0.1 * scale)
        s, d, v, _ = stats_at(0.0, ints, model)
        b = decoy_bounds(s, d, v, ints, model.e0)
        assert b.feasible
        assert b.e1_upper == 0.0
        assert previous < b.y1_lower <= 1.0
        previous = b.y1_lower
    assert previous == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("distance", [0.0, 50.0, 100.0])
def test_decoy_bounds_conservative(distance):
    ints = Intensities(0.5, 0.1)
    s, d, v, eta = stats_at(distance, ints)
    b = decoy_bounds(s, d, v, ints)
    y0 = MODEL.dark_count_prob
    assert b.y1_lower <= y0 + eta
    assert b.e1_upper >= (MODEL.e0 * y0 + MODEL.optical_error * eta) / (y0 + eta)


@settings(max_examples=60, deadline=None)
@given(distance=st.floats(0, 200), i=st.integers(2, 100), j=st.integers(1, 99))
def test_decoy_bounds_conservative_on_grid(distance, i, j):
    if j >= i:
        return
    ints = Intensities(i / 100, j / 100)
    s, d, v, eta = stats_at(distance, ints)
    b = decoy_bounds(s, d, v, ints)
    if not b.feasible:
        return
    y0 = MODEL.dark_count_prob
    assert b.y1_lower <= y0 + eta
    assert b.e1_upper >= (MODEL.e0 * y0 + MODEL.optical_error * eta) / (y0 + eta) - 1e-12


def test_decoy_bounds_golden_100km():
    ints = Intensities(0.5, 0.1)
    b = decoy_bounds(*stats_at(100.0, ints)[:3], ints)
    assert b.y1_lower == pytest.approx(0.0012244371394328474, rel=1e-9)
    assert b.e1_upper == pytest.approx(0.015603183440520505, rel=1e-9)


def test_decoy_bounds_infeasible():
    # decoy gain far below what the signal gain implies
    b = decoy_bounds((0.1, 0.01), (1e-7, 0.5), (1e-5, 0.5), Intensities(0.5, 0.1))
    assert not b.feasible
    assert b.y1_lower == 0.0
    assert key_rate(0.0, Intensities(0.5, 0.1), MODEL, 0.0).key_rate > 0


def test_corrected_delta():
    assert corrected_delta(0.0, 0.3) == 0.0
    assert corrected_delta(0.0, 0.0) == 0.0
    assert corrected_delta(0.01, 1.0) == 0.01
    assert corrected_delta(0.01, 0.0) == 0.5
    assert corrected_delta(0.4, 0.5) == 0.5
    with pytest.raises(ValueError):
        corrected_delta(0.6, 1.0)


def test_corrected_delta_pipeline_golden():
    # 40-digit pipeline at (0.5, 0.1): Y1L / eta_bob is the channel-referenced yield
    ints = Intensities(0.5, 0.1)
    assert key_rate(25.0, ints, MODEL, 0.01).delta_prime == pytest.approx(0.032572053727463012, rel=1e-9)
    assert key_rate(50.0, ints, MODEL, 0.01).delta_prime == pytest.approx(0.10303998875526153, rel=1e-9)
    # at 100 km the rescaled imbalance (1.0233) saturates
    assert key_rate(100.0, ints, MODEL, 0.01).delta_prime == 0.5


def test_corrected_e1_paper_formula():
    assert corrected_e1(0.05, 0.0, "paper") == 0.0
    assert corrected_e1(0.0, 0.1, "paper") == pytest.approx(0.36, abs=1e-15)
    # second term vanishes at delta' = 1/2, first is 1 - 2e, then clipped
    assert corrected_e1(0.3, 0.5, "paper") == pytest.approx(0.4, abs=1e-15)
    assert corrected_e1(0.1, 0.5, "paper") == 0.5


def test_corrected_e1_additive():
    assert corrected_e1(0.05, 0.0, "additive") == 0.05
    assert corrected_e1(0.0, 0.1, "additive") == pytest.approx(0.36, abs=1e-15)
    # sin^2 of the summed angles
    e, d = 0.02, 0.01
    a, b = math.asin(math.sqrt(e)), math.asin(2 * math.sqrt(d * (1 - d)))
    assert corrected_e1(e, d, "additive") == pytest.approx(math.sin(a + b) ** 2, abs=1e-15)
    with pytest.raises(ValueError):
        corrected_e1(0.1, 0.1, "other")


@settings(max_examples=100, deadline=None)
@given(e=st.floats(0, 0.25), d1=st.floats(0, 0.5), d2=st.floats(0, 0.5))
def test_corrected_e1_monotone_in_delta(e, d1, d2):
    # the printed formula turns back down near delta' = 1/2 once e1 > 1/4
    lo, hi = sorted((d1, d2))
    for variant in ("paper", "additive"):
        assert corrected_e1(e, lo, variant) <= corrected_e1(e, hi, variant) + 1e-15


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.49991595816452798, abs=1e-12)
    with pytest.raises(ValueError):
        binary_entropy(1.2)
    with pytest.raises(ValueError):
        binary_entropy(-0.1)


@settings(max_examples=100)
@given(x=st.floats(0, 1))
def test_binary_entropy_identities(x):
    h = binary_entropy(x)
    assert 0.0 <= h <= 1.0
    assert h == pytest.approx(binary_entropy(1 - x), abs=1e-12)


@pytest.mark.parametrize("distance", [0.0, 25.0, 50.0])
@pytest.mark.parametrize("variant", ["paper", "additive"])
def test_key_rate_golden(distance, variant):
    # 40-digit pipeline at (0.5, 0.1) with delta = 0.01; negative values floor at 0
    expected = {
        (0.0, "paper"): 0.0079912098187336759,
        (0.0, "additive"): 0.0072814381741625039,
        (25.0, "paper"): 0.00072313548601943853,
        (25.0, "additive"): 0.00058878804173974393,
        (50.0, "paper"): 0.0,
        (50.0, "additive"): 0.0,
    }[(distance, variant)]
    p = key_rate(distance, Intensities(0.5, 0.1), MODEL, 0.01, variant)
    assert p.key_rate == pytest.approx(expected, rel=1e-9, abs=1e-18)


def test_key_rate_matches_plain_decoy_at_zero_delta():
    for d in (0.0, 30.0, 80.0):
        for s, dec in ((0.5, 0.1), (0.8, 0.05), (0.3, 0.2)):
            k = key_rate(d, Intensities(s, dec), MODEL, 0.0, "additive").key_rate
            assert k == pytest.approx(plain_decoy_rate(d, s, dec), rel=1e-12, abs=1e-15)


def test_paper_variant_drops_phase_error_at_zero_delta():
    ints = Intensities(0.5, 0.1)
    p = key_rate(10.0, ints, MODEL, 0.0, "paper")
    assert p.e1_corrected == 0.0
    s, _, _, _ = stats_at(10.0, ints)
    expected = 0.5 * (0.5 * math.exp(-0.5) * p.y1_lower - 1.2 * s[0] * binary_entropy(s[1]))
    assert p.key_rate == pytest.approx(expected, rel=1e-12)


def test_key_rate_edge_cases():
    assert key_rate(0.0, Intensities(0.5, 0.1), MODEL, 0.0).key_rate > 0
    assert key_rate(0.0, Intensities(0.5, 0.1), MODEL, 0.5).key_rate == 0.0
    assert key_rate(1000.0, Intensities(0.5, 0.1), MODEL, 0.0).key_rate == 0.0


@settings(max_examples=40, deadline=None)
@given(d1=st.floats(0, 0.5), d2=st.floats(0, 0.5), distance=st.floats(0, 150))
def test_key_rate_monotone_in_delta(d1, d2, distance):
    lo, hi = sorted((d1, d2))
    ints = Intensities(0.5, 0.1)
    for variant in ("paper", "additive"):
        assert key_rate(distance, ints, MODEL, hi, variant).key_rate <= key_rate(
            distance, ints, MODEL, lo, variant
        ).key_rate


def test_grid_points():
    s, d = IntensityGrid().points()
    assert s.size == sum(range(100))
    assert np.all(d < s)
    assert s[0] == 0.02 and d[0] == 0.01 and s[-1] == 1.0 and d[-1] == 0.99
    assert list(s) == sorted(s)
    with pytest.raises(ValueError):
        IntensityGrid(signal_max=1.5)


def test_optimize_full_distinguishability():
    p = optimize_key_rate(0.0, MODEL, 0.5)
    assert p.key_rate == 0.0
    # all zero: tie-break picks the first grid point
    assert (p.intensities.signal, p.intensities.decoy) == (0.02, 0.01)


def test_optimize_matches_oracle_at_25km():
    p = optimize_key_rate(25.0, MODEL, 0.0, COARSE, "additive")
    assert p.key_rate == pytest.approx(plain_decoy_optimum(25.0, step=0.05), rel=1e-12)


def test_optimize_refinement_never_decreases():
    for delta in (0.0, 0.01):
        coarse = optimize_key_rate(20.0, MODEL, delta, IntensityGrid(0.1, 1.0, 0.1)).key_rate
        medium = optimize_key_rate(20.0, MODEL, delta, IntensityGrid(0.05, 1.0, 0.05)).key_rate
        fine = optimize_key_rate(20.0, MODEL, delta).key_rate
        assert coarse <= medium <= fine


def test_optimize_empty_grid():
    p = optimize_key_rate(0.0, MODEL, 0.0, IntensityGrid(0.5, 0.5, 0.5))
    assert p.key_rate == 0.0 and p.intensities is None


def test_optimize_is_argmax():
    best = optimize_key_rate(10.0, MODEL, 0.005, COARSE)
    s, d = COARSE.points()
    rates = [key_rate(10.0, Intensities(a, b), MODEL, 0.005).key_rate for a, b in zip(s, d)]
    assert best.key_rate == pytest.approx(max(rates), rel=1e-14)
    first = rates.index(max(rates))
    assert (best.intensities.signal, best.intensities.decoy) == (s[first], d[first])


def test_distance_scan_monotone():
    points = distance_scan(MODEL, range(0, 201, 10), 0.0, grid=COARSE)
    rates = [p.key_rate for p in points]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[0] > 0 and rates[-1] == 0.0


def test_distance_scan_ordering_by_visibility():
    curves = [
        [p.key_rate for p in distance_scan(MODEL, range(0, 161, 20), mu_hom=0.5, visibility=v, grid=COARSE)]
        for v in (0.5, 0.495, 0.47)
    ]
    for hi, lo in zip(curves, curves[1:]):
        assert all(a >= b for a, b in zip(hi, lo))
    assert curves[2][0] > 0


def test_distance_scan_rejects():
    with pytest.raises(ValueError):
        distance_scan(MODEL, [], 0.0)
    with pytest.raises(ValueError):
        resolve_delta()
    with pytest.raises(ValueError):
        resolve_delta(0.1, mu_hom=0.5, visibility=0.47)
    assert resolve_delta(mu_hom=0.5, visibility=0.47) == imbalance_uniform(0.5, 0.47).delta


def test_max_distance_brackets_cutoff():
    reach = max_distance(MODEL, 0.0, COARSE)
    assert optimize_key_rate(reach, MODEL, 0.0, COARSE).key_rate > 0
    assert optimize_key_rate(reach + 2e-3, MODEL, 0.0, COARSE).key_rate == 0
    assert max_distance(MODEL, 0.5, COARSE) == 0.0
    assert max_distance(MODEL, 0.0, COARSE, d_max_km=20.0) == 20.0
