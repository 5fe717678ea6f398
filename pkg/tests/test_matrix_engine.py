import random
from fractions import Fraction as Fr

import pytest

from conftest import REF7_CARRIES, REF7_STATES, build_ref7, build_signed_inflow
from corpus import random_cao
from snsq.matrix_engine import (
    build_operators,
    common_carry,
    effective_operators,
    matvec,
    partial_carries,
    step_general,
    step_scheduled,
    step_ungrouped,
    transfer_matrix,
)
from snsq.model import (
    Cao,
    CarryKind,
    CarryPartition,
    Entity,
    Image,
    Mode,
    NegativeCardinalError,
    Operand,
    Operator,
    Override,
)
from snsq.op_engine import common_carry_vector, step

# Each image coefficient lands in exactly one operand column of its operator;
# with the group minimum equalizing a group's carries, one column is enough,
# and a full fan-out would double-count fused inflows.
REF7_CONVERSION = (
    (0, 0, 0, 0, 0, 0, 0),
    (0, 0, 0, 0, 0, 0, 0),
    (1, 0, 0, 0, 0, 0, 0),  # d <- i column carries the fused pair's first image
    (0, 2, 0, 0, 0, 0, 0),  # s <- j column carries its second
    (0, 0, 2, 1, 0, 0, 0),
    (0, 0, 0, 3, 0, 0, 0),
    (0, 0, 0, 0, 1, 0, 0),  # h <- g column, representative of the (g, u) group
)

REF7_TRANSFER = (
    (-10, 0, 0, 0, 0, 0, 0),
    (0, -8, 0, 0, 0, 0, 0),
    (1, 0, -8, 0, 0, 0, 0),
    (0, 2, 0, -10, 0, 0, 0),
    (0, 0, 2, 1, -4, 0, 0),
    (0, 0, 0, 3, 0, -2, 0),
    (0, 0, 0, 0, 1, 0, 0),
)


def as_grid(rows):
    return tuple(tuple(Fr(c) for c in row) for row in rows)


class TestBuildOperators:
    def test_ref7_diagonals(self):
        ops = build_operators(build_ref7())
        radii = tuple(ops.radix[e][e] for e in range(7))
        assert radii == (10, 8, 8, 10, 4, 2, 0)
        inverses = tuple(ops.inverse_radix[e][e] for e in range(7))
        assert inverses == (Fr(1, 10), Fr(1, 8), Fr(1, 8), Fr(1, 10), Fr(1, 4), Fr(1, 2), 0)
        for e in range(7):
            for f in range(7):
                if e != f:
                    assert ops.radix[e][f] == 0 == ops.inverse_radix[e][f]

    def test_ref7_conversion_uses_one_column_per_image(self):
        ops = build_operators(build_ref7())
        assert ops.conversion == as_grid(REF7_CONVERSION)

    def test_ref7_transfer(self):
        ops = build_operators(build_ref7())
        assert transfer_matrix(ops) == as_grid(REF7_TRANSFER)

    def test_ref7_floor_mask_and_partition(self):
        ops = build_operators(build_ref7())
        assert ops.floor_mask == (False,) * 7
        assert ops.partition.groups == ((0, 1), (2,), (3,), (4, 5))
        assert ops.partition.sinks == (6,)

    def test_floor_mask_marks_floor_operands(self):
        ops = build_operators(build_signed_inflow())
        assert ops.floor_mask == (True, True, False)


class TestCarries:
    def test_partial_carries_divide_and_floor(self):
        ops = build_operators(build_signed_inflow())
        assert partial_carries((Fr(21), Fr(27), Fr(5)), ops) == (2, 3, 0)

    def test_group_minimum_and_sink_pinning(self):
        partition = CarryPartition(4, ((0, 1),), (2, 3))
        carries = (Fr(5), Fr(3), Fr(9), Fr(7))
        assert common_carry(partition, carries) == (3, 3, 0, 0)

    def test_ref7_step0_commons(self):
        ops = build_operators(build_ref7())
        commons = common_carry(ops.partition, partial_carries(REF7_STATES[0], ops))
        assert commons == REF7_CARRIES[0]


class TestSteps:
    def test_ref7_trajectory_matches_frozen_oracle(self):
        cao = build_ref7()
        ops = build_operators(cao)
        state = cao.initial_state()
        for k in range(3):
            state, commons = step_general(state, ops, cao.mode, k)
            assert state == REF7_STATES[k + 1]
            assert commons == REF7_CARRIES[k]
        settled, _ = step_general(state, ops, cao.mode, 3)
        assert settled == state

    def test_signed_inflow_step_and_violation(self):
        cao = build_signed_inflow()
        ops = build_operators(cao)
        new, _ = step_general(cao.initial_state(), ops, cao.mode)
        assert new == (1, 3, 8)

        bad = build_signed_inflow(loss=-5)
        with pytest.raises(NegativeCardinalError) as err:
            step_general(bad.initial_state(), build_operators(bad), bad.mode, 0)
        assert err.value.entity == "s"
        assert err.value.value == -4

    def test_ungrouped_matches_general_without_fan_in(self):
        cao = build_signed_inflow()
        ops = build_operators(cao)
        state = cao.initial_state()
        assert step_ungrouped(state, ops, cao.mode) == step_general(state, ops, cao.mode)

    def test_ungrouped_refuses_fan_in(self):
        ops = build_operators(build_ref7())
        with pytest.raises(ValueError):
            step_ungrouped(REF7_STATES[0], ops)

    def test_scheduled_steps_fold_in_overrides(self):
        cao = Cao(
            "drip",
            (Entity(0, "tank", 7), Entity(1, "cup", 0)),
            (Operator(CarryKind.INTEGER_FLOOR, (Operand(0, 4),), (Image(1, 1),)),),
            schedule={
                1: (Override(0, "radix", 0, Fr(2)),),
                2: (Override(0, "radix", 0, Fr(1)),),
            },
        )
        expected = ((7, 0), (3, 1), (1, 2), (0, 3))
        state = cao.initial_state()
        for k in range(3):
            assert state == expected[k]
            state, _ = step_scheduled(state, cao, k)
        assert state == expected[3]

    def test_disabling_zeroes_cells_but_not_the_partition(self):
        cao = Cao(
            "toggle",
            (Entity(0, "a", 9), Entity(1, "b", 0)),
            (Operator(CarryKind.RATIONAL_EXACT, (Operand(0, 3),), (Image(1, 1),)),),
            schedule={1: (Override(0, "enabled", None, False),)},
        )
        live = effective_operators(cao, 0)
        dead = effective_operators(cao, 1)
        assert live.radix[0][0] == 3 and dead.radix[0][0] == 0
        assert live.conversion[1][0] == 1 and dead.conversion[1][0] == 0
        assert dead.partition.groups == live.partition.groups == ((0,),)
        state, commons = step_general((Fr(9), Fr(0)), dead, cao.mode, 1)
        assert state == (9, 0) and commons == (0, 0)


def test_matvec():
    matrix = as_grid(((1, 2), (0, 3)))
    assert matvec(matrix, (Fr(5), Fr(7))) == (19, 21)


class TestBackendAgreement:
    def test_random_networks_agree_step_by_step(self):
        rng = random.Random(7)
        for case in range(60):
            cao = random_cao(rng, name=f"agree{case}")
            static = build_operators(cao) if not cao.schedule else None
            state = cao.initial_state()
            for k in range(5):
                op_err = mx_err = None
                try:
                    nxt_o, firings = step(state, cao, k)
                    commons_o = common_carry_vector(firings, cao.size)
                except NegativeCardinalError as err:
                    op_err = (err.entity, err.value)
                try:
                    ops = static if static is not None else effective_operators(cao, k)
                    nxt_m, commons_m = step_general(state, ops, cao.mode, k)
                except NegativeCardinalError as err:
                    mx_err = (err.entity, err.value)
                assert op_err == mx_err
                if op_err is not None:
                    break
                assert commons_o == commons_m
                assert nxt_o == nxt_m
                state = nxt_o
