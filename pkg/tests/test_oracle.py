"""Tests for the exact rational-arithmetic detection oracle."""

from fractions import Fraction

import pytest

from sqss.adversary import UnsupportedAttackError, catalog_ids
from sqss.oracle import (
    chained_measurement_distribution,
    detection_oracle,
    measurement_distribution,
)
from sqss.qstate import Basis, PrepState

Q = Fraction


def test_single_measurement_distributions_exact():
    assert measurement_distribution(PrepState.ZERO, Basis.Z) == {0: Q(1)}
    assert measurement_distribution(PrepState.MINUS, Basis.X) == {1: Q(1)}
    assert measurement_distribution(PrepState.PLUS, Basis.Z) == {0: Q(1, 2), 1: Q(1, 2)}
    assert measurement_distribution(PrepState.ONE, Basis.X) == {0: Q(1, 2), 1: Q(1, 2)}


def test_z_then_x_collapse_is_exactly_half():
    for s in PrepState:
        dist = chained_measurement_distribution(s, [Basis.Z, Basis.X])
        assert dist == {0: Q(1, 2), 1: Q(1, 2)}


def test_honest_probabilities_all_zero():
    assert set(detection_oracle("A", None).values()) == {Q(0)}
    assert set(detection_oracle("B", "b.none").values()) == {Q(0)}


def test_measure_resend_quarter_on_reflect_reflect_case():
    for attack in ("a.mr.bob.1", "a.mr.bob.2", "a.mr.charlie.1", "a.mr.charlie.2"):
        table = detection_oracle("A", attack)
        assert table["case4"] == Q(1, 4)
        assert table["case1"] == table["case2"] == table["case3"] == Q(0)


def test_intercept_resend_values_protocol_a():
    assert detection_oracle("A", "a.ir.bob") == {
        "case1": Q(0), "case2": Q(0), "case3": Q(1, 2), "case4": Q(1, 2)}
    assert detection_oracle("A", "a.ir.charlie.1") == {
        "case1": Q(0), "case2": Q(0), "case3": Q(0), "case4": Q(1, 2)}
    assert detection_oracle("A", "a.ir.charlie.2") == {
        "case1": Q(1, 2), "case2": Q(1, 2), "case3": Q(0), "case4": Q(0)}


def test_outsider_values_protocol_a():
    for leg in (1, 2, 3):
        assert detection_oracle("A", f"a.mr.eve.{leg}")["case4"] == Q(1, 4)
    assert detection_oracle("A", "a.ir.eve.1")["case4"] == Q(1, 2)
    assert detection_oracle("A", "a.ir.eve.2") == {
        "case1": Q(1, 2), "case2": Q(1, 2), "case3": Q(0), "case4": Q(1, 2)}
    assert detection_oracle("A", "a.ir.eve.3") == {
        "case1": Q(1, 2), "case2": Q(1, 2), "case3": Q(1, 2), "case4": Q(1, 2)}


def test_protocol_b_measure_resend_quarter_and_sift_immunity():
    for attack in ("b.mr.bob", "b.mr.charlie", "b.mr.eve.1", "b.mr.eve.2", "b.mr.eve.3"):
        table = detection_oracle("B", attack)
        assert table["ctrl"] == Q(1, 4)
        assert table["test_b"] == Q(0)
        assert table["test_c"] == Q(0)


def test_protocol_b_intercept_resend_values():
    assert detection_oracle("B", "b.ir.bob") == {
        "ctrl": Q(1, 2), "test_b": Q(0), "test_c": Q(1, 2)}
    assert detection_oracle("B", "b.ir.charlie") == {
        "ctrl": Q(1, 2), "test_b": Q(1, 2), "test_c": Q(0)}
    assert detection_oracle("B", "b.ir.eve.1") == {
        "ctrl": Q(1, 2), "test_b": Q(0), "test_c": Q(0)}
    assert detection_oracle("B", "b.ir.eve.3") == {
        "ctrl": Q(1, 2), "test_b": Q(1, 2), "test_c": Q(1, 2)}


def test_every_catalog_attack_disturbs_something():
    for attack_id in catalog_ids():
        table = detection_oracle(attack_id[0].upper(), attack_id)
        assert max(table.values()) > 0, attack_id


def test_unsupported_requests_rejected():
    with pytest.raises(UnsupportedAttackError):
        detection_oracle("A", "b.mr.bob")
    with pytest.raises(UnsupportedAttackError):
        detection_oracle("A", "a.em")
    with pytest.raises(ValueError):
        detection_oracle("C", "a.mr.bob.1")


def test_results_are_fractions_not_floats():
    for value in detection_oracle("A", "a.mr.bob.1").values():
        assert isinstance(value, Fraction)
