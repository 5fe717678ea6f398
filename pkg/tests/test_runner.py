import json
from fractions import Fraction as Fr

import pytest

from conftest import REF7_CARRIES, REF7_STATES, build_ref7, build_signed_inflow
from snsq import op_engine
from snsq.model import (
    Cao,
    CarryKind,
    Entity,
    Image,
    Mode,
    NegativeCardinalError,
    Operand,
    Operator,
    Override,
)
from snsq.runner import (
    StopReason,
    check_equivalence,
    detect_fixed_point,
    render_trace,
    run,
    write_trace,
)

RATIONAL = CarryKind.RATIONAL_EXACT


def two_loop(a, b):
    """Two entities passing their whole content around a 2-cycle."""
    return Cao(
        "loop",
        (Entity(0, "a", a), Entity(1, "b", b)),
        (
            Operator(RATIONAL, (Operand(0, 1),), (Image(1, 1),)),
            Operator(RATIONAL, (Operand(1, 1),), (Image(0, 1),)),
        ),
    )


class TestRun:
    @pytest.mark.parametrize("backend", ["operator", "matrix"])
    def test_ref7_reaches_its_fixed_point(self, backend):
        result = run(build_ref7(), max_steps=50, backend=backend)
        outcome = result.outcome
        assert outcome.reason is StopReason.FIXED_POINT
        assert outcome.steps == 3
        assert outcome.final_state == REF7_STATES[3]
        assert outcome.violation is None and outcome.revisit_of is None
        assert len(result.records) == 4
        for k in range(3):
            assert result.records[k].state == REF7_STATES[k]
            assert result.records[k].common_carry == REF7_CARRIES[k]
        final = result.records[3]
        assert final.state == REF7_STATES[3]
        assert final.common_carry is None and final.firings == ()

    def test_operator_backend_records_firings(self):
        result = run(build_ref7(), max_steps=50)
        assert {f.operator for f in result.records[0].firings} == {0, 1, 2, 3}
        matrix = run(build_ref7(), max_steps=50, backend="matrix")
        assert matrix.records[0].firings == ()
        assert matrix.records[0].common_carry == REF7_CARRIES[0]

    def test_two_cycle_is_detected(self):
        result = run(two_loop(1, 0), max_steps=50)
        outcome = result.outcome
        assert outcome.reason is StopReason.CYCLE_DETECTED
        assert outcome.steps == 2
        assert outcome.revisit_of == 0
        assert outcome.final_state == (1, 0)
        assert [r.state for r in result.records] == [(1, 0), (0, 1), (1, 0)]

    def test_period_one_repeat_is_a_fixed_point_not_a_cycle(self):
        # (1,1) swaps into itself; one extra step changes nothing, so the
        # fixed-point rule wins over cycle detection
        result = run(two_loop(1, 1), max_steps=50)
        assert result.outcome.reason is StopReason.FIXED_POINT
        assert result.outcome.steps == 0
        assert len(result.records) == 1

    def test_step_limit_on_growing_network(self):
        cao = Cao(
            "grow",
            (Entity(0, "a", 1), Entity(1, "b", 1)),
            (
                Operator(RATIONAL, (Operand(0, 1),), (Image(1, 2),)),
                Operator(RATIONAL, (Operand(1, 1),), (Image(0, 2),)),
            ),
        )
        result = run(cao, max_steps=5)
        assert result.outcome.reason is StopReason.STEP_LIMIT
        assert result.outcome.steps == 5
        assert result.outcome.final_state == (32, 32)
        assert len(result.records) == 6

    def test_fixed_point_wins_even_at_the_budget_edge(self):
        # settles at step 3 and the budget is exactly 3: the confirming
        # evaluation still runs, so this reports fixed_point, not step_limit
        result = run(build_ref7(), max_steps=3)
        assert result.outcome.reason is StopReason.FIXED_POINT
        assert result.outcome.steps == 3

    @pytest.mark.parametrize("backend", ["operator", "matrix"])
    def test_qminus_violation_stops_before_committing(self, backend):
        result = run(build_signed_inflow(loss=-5), max_steps=10, backend=backend)
        outcome = result.outcome
        assert outcome.reason is StopReason.QMINUS_VIOLATION
        assert outcome.steps == 0
        assert outcome.violation == ("s", Fr(-4))
        assert outcome.final_state == (21, 27, 5)
        assert len(result.records) == 1

    def test_violation_after_a_scheduled_change(self):
        cao = Cao(
            "late",
            (Entity(0, "a", 3), Entity(1, "t", 3)),
            (Operator(CarryKind.INTEGER_FLOOR, (Operand(0, 2),), (Image(1, -2),)),),
            mode=Mode.Q_MINUS,
            schedule={1: (Override(0, "radix", 0, Fr(1)),)},
        )
        result = run(cao, max_steps=10)
        assert result.outcome.reason is StopReason.QMINUS_VIOLATION
        assert result.outcome.steps == 1
        assert result.outcome.violation == ("t", Fr(-1))
        assert [r.state for r in result.records] == [(3, 3), (1, 1)]

    def test_zero_budget(self):
        moving = run(two_loop(1, 0), max_steps=0)
        assert moving.outcome.reason is StopReason.STEP_LIMIT
        assert moving.outcome.steps == 0
        assert len(moving.records) == 1
        settled = run(two_loop(1, 1), max_steps=0)
        assert settled.outcome.reason is StopReason.FIXED_POINT

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            run(build_ref7(), backend="quantum")
        with pytest.raises(ValueError):
            run(build_ref7(), max_steps=-1)

    def test_detect_fixed_point(self):
        assert detect_fixed_point((Fr(1), Fr(2)), (Fr(1), Fr(2)))
        assert not detect_fixed_point((Fr(1), Fr(2)), (Fr(1), Fr(3)))


class TestEquivalence:
    def test_ref7_backends_agree_until_rest(self):
        report = check_equivalence(build_ref7(), 10)
        assert report.equivalent
        assert report.steps == 3  # stops early at the shared fixed point

    def test_budget_caps_the_comparison(self):
        report = check_equivalence(build_ref7(), 2)
        assert report.equivalent and report.steps == 2

    def test_matching_violations_count_as_agreement(self):
        report = check_equivalence(build_signed_inflow(loss=-5), 5)
        assert report.equivalent and report.steps == 0

    def test_state_divergence_is_localized(self, monkeypatch):
        real = op_engine.step

        def skewed(state, cao, k):
            new, firings = real(state, cao, k)
            return (new[0] + 1,) + new[1:], firings

        monkeypatch.setattr("snsq.op_engine.step", skewed)
        report = check_equivalence(build_ref7(), 3)
        assert not report.equivalent
        assert report.kind == "state"
        assert report.step == 0 and report.entity == "i"
        assert report.operator_value == REF7_STATES[1][0] + 1
        assert report.matrix_value == REF7_STATES[1][0]

    def test_carry_divergence_is_localized(self, monkeypatch):
        real = op_engine.common_carry_vector

        def skewed(firings, size):
            vector = real(firings, size)
            return vector[:3] + (vector[3] + 1,) + vector[4:]

        monkeypatch.setattr("snsq.op_engine.common_carry_vector", skewed)
        report = check_equivalence(build_ref7(), 3)
        assert not report.equivalent
        assert report.kind == "carry" and report.entity == "s"
        assert report.operator_value == REF7_CARRIES[0][3] + 1
        assert report.matrix_value == REF7_CARRIES[0][3]

    def test_one_sided_violation_is_an_outcome_divergence(self, monkeypatch):
        def refuses(state, cao, k):
            raise NegativeCardinalError("i", Fr(-1), k)

        monkeypatch.setattr("snsq.op_engine.step", refuses)
        report = check_equivalence(build_ref7(), 3)
        assert not report.equivalent
        assert report.kind == "outcome" and report.entity == "i"
        assert report.operator_value == Fr(-1)
        assert report.matrix_value is None


class TestTraces:
    def test_jsonl_shape_and_values(self):
        result = run(build_ref7(), max_steps=10)
        names = build_ref7().entity_names()
        text = render_trace(result.records, names, "jsonl")
        assert text.endswith("\n")
        lines = text.splitlines()
        assert len(lines) == 4
        first = json.loads(lines[0])
        assert first["step"] == 0
        assert first["state"]["i"] == "33"
        assert first["common_carry"]["j"] == "21/8"
        assert {f["op"] for f in first["firings"]} == {0, 1, 2, 3}
        fused = next(f for f in first["firings"] if f["op"] == 0)
        assert fused["common"] == "21/8"
        assert fused["remainders"] == {"i": "27/4", "j": "0"}
        assert fused["transformants"] == {"d": "21/8", "s": "21/4"}
        last = json.loads(lines[-1])
        assert set(last) == {"step", "state"}
        assert last["state"]["h"] == "189/640"

    def test_matrix_records_render_without_firings(self):
        result = run(build_ref7(), max_steps=10, backend="matrix")
        names = build_ref7().entity_names()
        first = json.loads(render_trace(result.records, names).splitlines()[0])
        assert "firings" not in first
        assert first["common_carry"]["i"] == "21/8"

    def test_rendering_is_deterministic(self):
        names = build_ref7().entity_names()
        a = render_trace(run(build_ref7(), max_steps=10).records, names)
        b = render_trace(run(build_ref7(), max_steps=10).records, names)
        assert a == b

    def test_csv_layout(self):
        result = run(build_ref7(), max_steps=10)
        text = render_trace(result.records, build_ref7().entity_names(), "csv")
        lines = text.splitlines()
        assert lines[0] == "step,entity,cardinal"
        assert len(lines) == 1 + 4 * 7
        assert lines[1] == "0,i,33"
        assert "3,h,189/640" in lines

    def test_write_trace_round_trips_bytes(self, tmp_path):
        result = run(build_ref7(), max_steps=10)
        names = build_ref7().entity_names()
        target = tmp_path / "trace.jsonl"
        write_trace(str(target), result.records, names)
        assert target.read_text(encoding="utf-8") == render_trace(result.records, names)

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render_trace((), (), "xml")
