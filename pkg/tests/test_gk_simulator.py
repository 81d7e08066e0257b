from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from channel_model import correlation_distance, eval_quantum, eval_shared
from gk_simulator import (
    PartitionError,
    PartitionX,
    PartitionY,
    SharedDitProtocol,
    build_stabilizer_strategy,
    classical_simulation_exact,
    classical_simulation_sampled,
    decode_cell,
    maximal_partitions,
    partitions_from_json,
    quantum_mixture,
    random_partitions,
    simulate_shared_stabilizer,
    verify_mixture,
    verify_sampled,
    verify_theorem1,
)


def _expected(d, k, j, t, b):
    if t == k:
        return 1.0 if b == j else 0.0
    return 1.0 / d


def test_decode_cell():
    assert decode_cell(1, 2) == (1, 0)
    assert decode_cell(6, 2) == (3, 1)
    assert decode_cell(5, 3) == (2, 1)
    for bad in (0, 7):
        with pytest.raises(PartitionError):
            decode_cell(bad, 2)


def test_partitions_validated():
    with pytest.raises(PartitionError):
        PartitionX(2, {"a": 7})
    with pytest.raises(PartitionError):
        PartitionY(3, {"y": 5})
    with pytest.raises(PartitionError):
        PartitionX(2, {})


def test_qubit_table_reproduced():
    part_x, part_y = maximal_partitions(2)
    corr = eval_quantum(build_stabilizer_strategy(part_x, part_y, 2))
    entries = 0
    for r in part_x.inputs:
        k, j = decode_cell(r, 2)
        for t in part_y.inputs:
            for b in (0, 1):
                assert abs(corr.p(b, r, t) - _expected(2, k, j, t, b)) < 1e-12
                entries += 1
    assert entries == 36


@pytest.mark.parametrize("d", [3, 5])
def test_block_pattern(d):
    part_x, part_y = maximal_partitions(d)
    corr = eval_quantum(build_stabilizer_strategy(part_x, part_y, d))
    for r in part_x.inputs:
        k, j = decode_cell(r, d)
        for t in part_y.inputs:
            for b in range(d):
                assert abs(corr.p(b, r, t) - _expected(d, k, j, t, b)) < 1e-12


def test_protocol_same_basis_deterministic_cross_basis_uniform():
    part_x, part_y = maximal_partitions(5)
    corr = classical_simulation_exact(part_x, part_y, 5)
    for r in part_x.inputs:
        k, j = decode_cell(r, 5)
        for t in part_y.inputs:
            for b in range(5):
                value = corr.p(b, r, t)
                assert isinstance(value, Fraction)
                assert value == (Fraction(int(b == j)) if t == k else Fraction(1, 5))


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_simulation_exact_for_maximal_partitions(d):
    report = verify_theorem1(*maximal_partitions(d), d)
    assert report.passed
    assert report.max_deviation < 1e-12
    labelled = eval_quantum(build_stabilizer_strategy(*maximal_partitions(d), d), exact=True)
    assert correlation_distance(labelled, report.classical) == 0


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_simulation_exact_for_random_partitions(d, rng):
    for _ in range(20):
        x_cells = rng.choice(np.arange(1, d * (d + 1) + 1), size=3, replace=False).tolist()
        y_bases = rng.choice(np.arange(1, d + 2), size=2, replace=False).tolist()
        part_x, part_y = random_partitions(d, rng, x_size=5, y_size=3, x_cells=x_cells, y_bases=y_bases)
        assert verify_theorem1(part_x, part_y, d).passed


def test_partial_qutrit_partition():
    part_x = PartitionX(3, {"a": 1, "b": 1, "c": 8})
    part_y = PartitionY(3, {"u": 2, "v": 4})
    report = verify_theorem1(part_x, part_y, 3)
    assert report.passed
    assert report.to_dict()["mode"] == "exact"


def test_single_cell_partition_is_input_independent():
    part_x = PartitionX(3, {"a": 4, "b": 4, "c": 4})
    part_y = PartitionY(3, {"u": 1, "v": 2})
    corr = classical_simulation_exact(part_x, part_y, 3)
    for y in part_y.inputs:
        for b in range(3):
            assert corr.p(b, "a", y) == corr.p(b, "b", y) == corr.p(b, "c", y)


def test_two_atom_qubit_mixture():
    first = maximal_partitions(2)
    second = (PartitionX(2, {r: 7 - r for r in range(1, 7)}), PartitionY(2, {1: 3, 2: 3, 3: 1}))
    atoms = [(Fraction(1, 2), *first), (Fraction(1, 2), *second)]
    report = verify_mixture(atoms, 2)
    assert report.passed
    assert report.classical.exact
    assert correlation_distance(eval_shared(quantum_mixture(atoms, 2)), report.classical) == 0


def test_three_atom_qutrit_mixture(rng):
    parts = [random_partitions(3, rng, x_size=4, y_size=2) for _ in range(3)]
    weights = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))
    atoms = [(w, px, py) for w, (px, py) in zip(weights, parts)]
    assert verify_mixture(atoms, 3).passed


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_random_mixtures(d, rng):
    for _ in range(5):
        raw = rng.integers(1, 6, size=3)
        atoms = []
        for r in raw:
            part_x, part_y = random_partitions(d, rng, x_size=4, y_size=3)
            atoms.append((Fraction(int(r), int(raw.sum())), part_x, part_y))
        assert verify_mixture(atoms, d).passed


@pytest.mark.parametrize("d", [2, 3])
def test_pure_atoms_reassemble_protocol(d):
    protocol = SharedDitProtocol(*maximal_partitions(d), d)
    expanded = protocol.pure_atoms()
    assert len(expanded.atoms) == d ** (d + 1)
    assert correlation_distance(eval_shared(expanded), protocol.correlation()) == 0


def test_shared_protocol_atoms_in_shared_strategy():
    part_x, part_y = maximal_partitions(2)
    shared = simulate_shared_stabilizer([(Fraction(1), part_x, part_y)], 2)
    assert shared.kind == "classical"
    assert correlation_distance(eval_shared(shared), classical_simulation_exact(part_x, part_y, 2)) == 0


def test_sampling_is_seeded():
    part_x, part_y = maximal_partitions(2)
    first = classical_simulation_sampled(part_x, part_y, 2, 500, seed=11)
    second = classical_simulation_sampled(part_x, part_y, 2, 500, seed=11)
    assert correlation_distance(first.correlation, second.correlation) == 0


def test_single_sample_is_deterministic():
    part_x, part_y = maximal_partitions(3)
    sampled = classical_simulation_sampled(part_x, part_y, 3, 1, seed=3)
    assert {float(v) for _, _, _, v in sampled.correlation.rows()} <= {0.0, 1.0}
    with pytest.raises(ValueError):
        classical_simulation_sampled(part_x, part_y, 3, 0)


def test_sampling_converges_at_root_n():
    part_x, part_y = maximal_partitions(2)
    passes = 0
    for seed in range(20):
        report = verify_sampled(part_x, part_y, 2, 100_000, seed=seed)
        passes += report.passed
        assert report.mode == "sampled"
        assert report.to_dict()["seed"] == seed
    assert passes >= 19

    scaled = []
    for n in (1_000, 10_000, 100_000):
        deviations = [verify_sampled(part_x, part_y, 2, n, seed=s).max_deviation for s in range(5)]
        scaled.append(math.sqrt(n) * float(np.mean(deviations)))
    assert max(scaled) < 5.0


def test_partition_files(data_dir):
    for name, dim in (("partitions_d2_maximal.json", 2), ("partitions_d3_maximal.json", 3), ("partitions_d5_partial.json", 5)):
        d, part_x, part_y = partitions_from_json(json.loads((data_dir / name).read_text()))
        assert d == dim
        assert verify_theorem1(part_x, part_y, d).passed
    with pytest.raises(PartitionError):
        partitions_from_json({"dim": 2, "x_cells": {"a": 1}})
