from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core.allocation import (
    allocate,
    brute_force_allocation,
    closed_form_allocation,
    count_combinations,
    distortion_terms,
    enumerate_allocations,
    equalization_allocation,
    multichoose_count,
    objective,
    printed_offsets,
    repaired_offsets,
    round_allocation,
    term_constants,
    uniform_allocation,
)
from core.config import ScenarioConfig
from core.quantizer import BitAllocation


@pytest.fixture
def cfg():
    return ScenarioConfig(n_tx=16, n_subcarriers=32, n_paths=3, tau_max_s=100e-9)


def test_each_added_bit_quarters_its_term(cfg):
    base = distortion_terms(cfg, BitAllocation(5, 5, 5, 5)).as_tuple()
    for k in range(4):
        bits = [5, 5, 5, 5]
        bits[k] += 1
        bumped = distortion_terms(cfg, BitAllocation(*bits)).as_tuple()
        assert bumped[k] == pytest.approx(base[k] / 4, rel=1e-12)
        assert objective(cfg, BitAllocation(*bits)) < sum(base)


def test_terms_rank_angle_and_delay_above_gain_and_phase(cfg):
    c_theta, c_tau, c_beta, c_phi = distortion_terms(cfg, BitAllocation(6, 6, 6, 6)).as_tuple()
    assert min(c_theta, c_tau) > 10 * max(c_beta, c_phi)


def test_gain_term_matches_independent_evaluation(cfg):
    expected = cfg.n_paths * cfg.n_subcarriers * cfg.n_tx * cfg.beta_max**2 / 12 * 4.0**-6
    assert distortion_terms(cfg, BitAllocation(6, 6, 6, 6)).c_beta == pytest.approx(expected)


@pytest.mark.parametrize("q, expected", [(0, 1), (1, 4), (20, 1771)])
def test_count_combinations(q, expected):
    assert count_combinations(q) == expected


def test_count_matches_enumeration():
    for q in range(31):
        rows = enumerate_allocations(q)
        assert len(rows) == count_combinations(q)
        assert np.all(rows.sum(axis=1) == q)


def test_multichoose_count_at_twenty_bits():
    assert multichoose_count(20) == 8855


@pytest.mark.parametrize(
    "q, expected",
    [(16, (3, 12, 0, 1)), (20, (4, 13, 1, 2)), (24, (5, 14, 2, 3))],
)
def test_brute_force_on_desk_scenario(cfg, q, expected):
    assert brute_force_allocation(cfg, q).as_tuple() == expected


def test_brute_force_edge_cases(cfg):
    assert brute_force_allocation(cfg, 0).as_tuple() == (0, 0, 0, 0)
    with pytest.raises(ValueError):
        brute_force_allocation(cfg, 65)


@pytest.mark.parametrize("q", [4, 8, 12, 16, 20, 24])
def test_brute_force_beats_closed_form_beats_uniform(cfg, q):
    best = objective(cfg, brute_force_allocation(cfg, q))
    closed = objective(cfg, closed_form_allocation(cfg, q).allocation)
    assert best <= closed <= objective(cfg, uniform_allocation(q))
    if q >= 16:
        assert closed <= 1.05 * best


def test_equalization_makes_terms_equal(cfg):
    bits = equalization_allocation(cfg, 24)
    assert bits.sum() == pytest.approx(24, abs=1e-12)
    terms = term_constants(cfg) * 4.0**-bits
    assert np.allclose(terms, terms[0], rtol=1e-9)


def test_equalization_skips_parameters_without_distortion():
    bits = equalization_allocation(ScenarioConfig(n_tx=1), 12)
    assert bits[0] == 0
    assert bits.sum() == pytest.approx(12)


def test_repaired_offsets_equal_the_equalized_optimum(cfg):
    assert np.allclose(repaired_offsets(cfg), equalization_allocation(cfg, 24) - 6, atol=1e-9)


def test_printed_offsets_differ_in_angle_and_gain(cfg):
    diff = printed_offsets(cfg) - repaired_offsets(cfg)
    assert diff[0] == pytest.approx(-math.log2(cfg.n_subcarriers) / 8)
    assert diff[1] == pytest.approx(0.0, abs=1e-12)
    assert diff[2] > 1.0
    assert diff[3] == pytest.approx(0.0, abs=1e-12)


def test_closed_form_real_bits_shift_by_one_every_four_bits(cfg):
    a = closed_form_allocation(cfg, 20).real_bits
    b = closed_form_allocation(cfg, 24).real_bits
    assert np.allclose(b - a, 1.0)
    assert closed_form_allocation(cfg, 24).allocation.total == 24


def test_closed_form_validates_arguments(cfg):
    with pytest.raises(ValueError):
        closed_form_allocation(cfg, 3)
    with pytest.raises(ValueError):
        closed_form_allocation(cfg, 8, variant="typeset")


def test_rounding_pins_negative_bits_and_keeps_total():
    assert round_allocation(np.array([-3.0, 5.0, 1.0, 1.0]), 4).as_tuple() == (0, 4, 0, 0)


def test_rounding_breaks_ties_in_parameter_order():
    assert round_allocation(np.array([1.5, 1.5, 0.5, 0.5]), 4).as_tuple() == (2, 2, 0, 0)


@pytest.mark.parametrize("method", ["closed", "brute", "equalize", "uniform"])
def test_allocate_preserves_budget(cfg, method):
    assert allocate(cfg, 20, method).total == 20


def test_allocate_rejects_unknown_method(cfg):
    with pytest.raises(ValueError):
        allocate(cfg, 20, "greedy")
