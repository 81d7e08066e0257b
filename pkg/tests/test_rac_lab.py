from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from rac_lab import (
    CLASSICAL_THRESHOLD,
    RacTask,
    RegionClass,
    StrategyTag,
    advantage_region,
    best_single_magic,
    case_decoding,
    enmq_strategy,
    rac2_magic_encodings,
    majority,
    meid_report,
    nmq_report,
    octagon_excess,
    onmq_strategy,
    optimal_uplift,
    optimize_unrestricted,
    rac2_strategy,
    rac3_case_strategies,
    region_to_csv_rows,
    single_magic_success,
    single_magic_uplift,
    uplift_formula,
    uplift_gain,
    uplift_target,
)
from stab_mub import BlochVector, StabilizerStateId, magic_l1

ROOT_HALF = 1 / math.sqrt(2)


def _meid_closed_form(N):
    return Fraction(1, 2) + Fraction(math.comb(N - 1, (N - 1) // 2), 2 ** N)


def _xz(theta):
    return BlochVector(math.sin(theta), 0.0, math.cos(theta))


def test_majority_ties_go_to_zero():
    assert majority("0") == 0
    assert majority("1") == 1
    assert majority("01") == 0
    assert majority("0111") == 1
    assert majority("0011") == 0


def test_meid_small_codes():
    assert meid_report(1).average_success == 1
    assert meid_report(2).average_success == Fraction(3, 4)
    report = meid_report(3)
    assert report.average_success == Fraction(3, 4)
    assert report.strategy_tag is StrategyTag.MEID
    assert report.to_dict()["average_success"] == "3/4"


def test_meid_per_string_values():
    report = meid_report(5)
    assert report.per_string["00000"] == 1
    assert report.per_string["00001"] == Fraction(4, 5)
    assert report.per_string["00011"] == Fraction(3, 5)
    assert report.per_string["11100"] == Fraction(3, 5)
    assert report.recomputed_average() == report.average_success == Fraction(11, 16)


@pytest.mark.parametrize("N", range(2, 9))
def test_stabilizer_codes_match_meid(N):
    classical = meid_report(N)
    quantum = nmq_report(N)
    assert quantum.exact
    assert quantum.strategy_tag is (StrategyTag.ONMQ if N % 2 else StrategyTag.ENMQ)
    assert quantum.average_success == classical.average_success == _meid_closed_form(N)


def test_stabilizer_codes_need_matching_parity():
    with pytest.raises(ValueError, match="odd"):
        onmq_strategy(4)
    with pytest.raises(ValueError, match="even"):
        enmq_strategy(3)


def test_onmq_encoding_rule():
    strategy = onmq_strategy(3)
    assert strategy.stabilizer_encoding["001"] == StabilizerStateId(1, 0)
    assert strategy.stabilizer_encoding["110"] == StabilizerStateId(1, 1)
    assert strategy.stabilizer_encoding["011"] == StabilizerStateId(2, 1)
    assert strategy.mub_decoding == {1: 1, 2: 1, 3: 2}


def test_nmq_per_string_values():
    odd = nmq_report(5)
    meid_odd = meid_report(5)
    # n=2: unique head majority (n+k+1/2)/(2n+1), tied head (n+1)/(2n+1)
    assert odd.per_string["00010"] == Fraction(7, 10)
    assert odd.per_string["11111"] == Fraction(9, 10)
    assert odd.per_string["00110"] == Fraction(3, 5)
    assert meid_odd.per_string["00010"] == Fraction(4, 5)
    assert meid_odd.per_string["00110"] == Fraction(3, 5)

    even = nmq_report(4)
    meid_even = meid_report(4)
    # n=2: (n+k+1/2)/2n
    assert even.per_string["0010"] == Fraction(5, 8)
    assert even.per_string["0000"] == Fraction(7, 8)
    assert meid_even.per_string["0010"] == Fraction(3, 4)
    assert meid_even.per_string["0000"] == 1


def test_rac2_vertex_optimum():
    vertices = [
        BlochVector.vertex(StabilizerStateId(1, 0)),
        BlochVector.vertex(StabilizerStateId(1, 0)),
        BlochVector.vertex(StabilizerStateId(2, 0)),
        BlochVector.vertex(StabilizerStateId(1, 1)),
    ]
    report = rac2_strategy(vertices)
    assert report.average_success == CLASSICAL_THRESHOLD
    assert not report.magic


def test_rac2_single_magic_configuration():
    report = rac2_strategy(rac2_magic_encodings())
    assert abs(report.average_success - (11 + math.sqrt(2)) / 16) < 1e-12
    assert abs(report.closed_form - report.average_success) < 1e-12
    assert set(report.magic) == {"00"}
    assert abs(report.magic["00"] - (math.sqrt(2) - 1)) < 1e-8
    assert report.details["decoding"] == {"1": "Z", "2": "X"}


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.3, math.sqrt(2) - 1])
def test_rac2_gain_is_linear_in_plane_excess(eps):
    encodings = rac2_magic_encodings()
    encodings["00"] = BlochVector((1 + eps) / 2, 0.0, (1 + eps) / 2)
    report = rac2_strategy(encodings)
    assert abs(report.average_success - (0.75 + eps / 16)) < 1e-12
    assert abs(report.plane_excess["00"] - eps) < 1e-12


def test_rac2_rejects_partial_or_invalid_encodings():
    with pytest.raises(ValueError):
        rac2_strategy({"00": (0, 0, 1)})
    with pytest.raises(ValueError):
        rac2_strategy([(1, 0, 1)] * 4)


def test_case_one_caps_at_classical_value():
    report = rac3_case_strategies("I")
    assert report.average_success == Fraction(3, 4)
    assert report.strategy_tag is StrategyTag.CASE_I
    ceiling = best_single_magic(RacTask(3), case_decoding("I"))
    assert abs(ceiling.average_success - 0.75) < 1e-9
    unrestricted = optimize_unrestricted(RacTask(3), case_decoding("I"))
    assert 0.75 - 1e-9 <= unrestricted.average_success <= 0.75 + 1e-9


def test_case_two_values():
    stabilizer = rac3_case_strategies("II")
    assert stabilizer.average_success == Fraction(2, 3)
    single = best_single_magic(RacTask(3), case_decoding("II"), StrategyTag.CASE_II)
    assert abs(single.average_success - (31 + math.sqrt(3)) / 48) < 1e-9
    assert abs(single.details["gap"]) < 1e-9
    unrestricted = optimize_unrestricted(RacTask(3), case_decoding("II"))
    assert abs(unrestricted.average_success - 0.5 * (1 + 1 / math.sqrt(3))) < 1e-9


@pytest.mark.parametrize("orientation", ["x", "z"])
def test_case_three_vertices_reach_classical_value(orientation):
    report = rac3_case_strategies("III", orientation=orientation)
    assert report.average_success == Fraction(3, 4)


def test_case_three_t_direction_beats_classical():
    point = np.array([[ROOT_HALF, 0.0, ROOT_HALF]])
    value = single_magic_success(RacTask(3), case_decoding("III"), point)[0]
    assert value > 0.75
    assert abs(value - (0.75 + (3 * ROOT_HALF - 2) / 48)) < 1e-12


def test_case_three_orientation_checked():
    with pytest.raises(ValueError):
        case_decoding("III", "y")


def test_unrestricted_rac2():
    report = optimize_unrestricted(RacTask(2))
    assert abs(report.average_success - 0.5 * (1 + ROOT_HALF)) < 1e-9
    assert abs(report.details["gap"]) < 1e-9
    stabilizer = optimize_unrestricted(RacTask(2), stabilizer_only=True)
    assert stabilizer.average_success == Fraction(3, 4)
    assert stabilizer.details["gap"] == 0


def test_unrestricted_needs_small_code():
    with pytest.raises(ValueError):
        optimize_unrestricted(RacTask(4))


def test_region_matches_octagon():
    samples = advantage_region("rac3", grid_step=0.01)
    classes = {sample.classification for sample in samples}
    assert RegionClass.MAGIC_NO_ADVANTAGE in classes
    assert RegionClass.MAGIC_ADVANTAGE in classes
    for sample in samples:
        assert sample.nx ** 2 + sample.nz ** 2 <= 1 + 1e-9
        excess = octagon_excess(sample.nx, sample.nz)
        if sample.classification is RegionClass.STABILIZER:
            assert abs(sample.nx) + abs(sample.nz) <= 1 + 1e-9
        elif excess > 1e-6:
            assert sample.classification is RegionClass.MAGIC_ADVANTAGE
        elif excess < -1e-6:
            assert sample.classification is RegionClass.MAGIC_NO_ADVANTAGE
        if sample.classification is RegionClass.BOUNDARY:
            assert abs(sample.success - 0.75) < 1e-8


def test_region_boundary_point():
    samples = advantage_region("rac3", grid_step=0.01)
    near = [s for s in samples if abs(s.nx - 0.9) < 1e-9 and abs(s.nz - 0.2) < 1e-9]
    assert len(near) == 1
    assert near[0].classification is RegionClass.BOUNDARY


def test_rac2_region_has_no_wasted_magic():
    samples = advantage_region("rac2", grid_step=0.05)
    assert all(s.classification is not RegionClass.MAGIC_NO_ADVANTAGE for s in samples)
    rows = region_to_csv_rows(samples)
    assert rows[0] == ["nx", "nz", "class", "success"]
    assert len(rows) == len(samples) + 1


def test_region_rejects_bad_input():
    with pytest.raises(ValueError):
        advantage_region("rac3", grid_step=0.0)
    with pytest.raises(ValueError):
        advantage_region("rac5")


def test_uplift_targets():
    assert uplift_target(5, 1) == "00010"
    assert uplift_target(5, 2) == "00000"
    assert uplift_target(4, 0) == "0010"
    assert uplift_target(4, 1, last_bit=1) == "0001"
    for N, k in ((5, 0), (5, 3), (4, 2), (4, -1)):
        with pytest.raises(ValueError):
            uplift_target(N, k)


def test_uplift_with_vertex_keeps_base_value():
    base = nmq_report(5)
    report = single_magic_uplift(5, "00010", BlochVector.vertex(StabilizerStateId(1, 0)))
    assert abs(float(report.average_success) - float(base.average_success)) < 1e-12
    assert abs(report.details["improvement"]) < 1e-12


@pytest.mark.parametrize("N, k", [(5, 1), (5, 2), (4, 0), (4, 1)])
def test_optimal_uplift_improves_on_meid(N, k):
    optimum = optimal_uplift(N, k)
    m = 2 * k if N % 2 else 2 * k + 1
    assert abs(optimum.theta - math.atan(1 / m)) < 1e-12
    assert abs(optimum.gain - (math.sqrt(m * m + 1) - m)) < 1e-12

    target = uplift_target(N, k)
    report = single_magic_uplift(N, target, _xz(optimum.theta))
    assert abs(report.details["improvement"] - optimum.gain / (2 * N * 2 ** N)) < 1e-12
    assert abs(report.details["target_success"] - report.details["formula"]) < 1e-12
    assert abs(report.details["formula"] - uplift_formula(N, k, _xz(optimum.theta))) < 1e-12
    assert report.details["k"] == k
    assert report.details["base_average"] == report.details["meid_average"]


def test_uplift_gain_shape():
    assert abs(uplift_gain(5, 1, _xz(0.3)) - (2 * math.cos(0.3) + math.sin(0.3) - 2)) < 1e-12
    assert abs(uplift_gain(5, 1, _xz(0.3)) - 0.206) < 1e-3
    theta = 1e-4
    assert abs(uplift_gain(5, 1, _xz(theta)) / theta - 1) < 1e-3
    assert uplift_gain(5, 1, _xz(0.0)) == 0


def test_uplift_rejects_mismatched_base():
    with pytest.raises(ValueError):
        single_magic_uplift(5, "00010", (0.0, 0.0, 1.0), base="ENMQ")
    with pytest.raises(ValueError):
        single_magic_uplift(5, "0001", (0.0, 0.0, 1.0))


def test_rac2_off_plane_slice_wastes_magic():
    samples = advantage_region("rac2", grid_step=0.1, ny=0.7)
    assert all(s.ny == 0.7 for s in samples)
    assert all(s.nx ** 2 + 0.49 + s.nz ** 2 <= 1 + 1e-9 for s in samples)
    point = [s for s in samples if abs(s.nx - 0.5) < 1e-9 and abs(s.nz - 0.3) < 1e-9]
    assert len(point) == 1
    assert point[0].classification is RegionClass.MAGIC_NO_ADVANTAGE
    assert abs(point[0].success - 0.7375) < 1e-12
    state = BlochVector(0.5, 0.7, 0.3)
    assert abs(magic_l1(2, state.density()).value - 0.5) < 1e-12
    assert state.plane_excess == 0
    for sample in samples:
        if sample.classification is RegionClass.STABILIZER:
            assert abs(sample.nx) + 0.7 + abs(sample.nz) <= 1 + 1e-9


def test_region_slice_checked():
    with pytest.raises(ValueError):
        advantage_region("rac2", grid_step=0.1, ny=1.5)
