import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzcast.distribution import (
    KIND_DECOY,
    KIND_INFORMATION,
    TupleRecord,
    build_plan,
    dispatch,
    make_decoy_tuple,
    render_signs,
)
from ghzcast.statevec import prepare_ghz, states_equal


def test_decoy_tuple_records_preparation(rng):
    record = make_decoy_tuple(3, rng, signs=(0, 1, 0))
    assert record.kind == KIND_DECOY
    assert record.decoy_prep == (0, 1, 0)
    assert record.tuple_state.num_qubits == 3
    assert render_signs(record.decoy_prep) == "+-+"


def test_decoy_tuple_random_signs(rng):
    seen = {make_decoy_tuple(2, rng).decoy_prep for _ in range(100)}
    assert seen == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_tuple_record_kind_guard(rng):
    state = prepare_ghz(3)
    with pytest.raises(ValueError):
        TupleRecord(0, "noise", None, state)
    with pytest.raises(ValueError):
        TupleRecord(0, KIND_INFORMATION, (0, 1, 0), state)
    with pytest.raises(ValueError):
        TupleRecord(0, KIND_DECOY, None, state)


class TestBuildPlan:
    def test_no_decoys_is_identity_order(self, rng):
        plan = build_plan(6, 0, 3, rng)
        assert plan.order == tuple(range(6))
        assert plan.decoy_positions == ()
        assert plan.information_positions == tuple(range(6))

    def test_counts(self, rng):
        plan = build_plan(6, 4, 3, rng)
        assert len(plan.tuples) == 10
        assert len(plan.position_map) == 4
        assert len(plan.information_positions) == 6
        assert set(plan.decoy_positions) | set(plan.information_positions) == set(range(10))

    def test_information_tuples_share_ghz(self, rng):
        plan = build_plan(4, 2, 3, rng)
        ghz = prepare_ghz(3)
        for pos in plan.information_positions:
            assert states_equal(plan.tuples[pos].tuple_state, ghz)

    def test_payload_bit_order_follows_stream(self, rng):
        # information tuple j in stream order carries payload bit j
        for _ in range(20):
            plan = build_plan(5, 3, 3, rng)
            info_ids = [plan.order[pos] for pos in plan.information_positions]
            assert info_ids == list(range(5))

    def test_interleave_is_uniform(self):
        rng = np.random.default_rng(99)
        first_is_decoy = 0
        draws = 10_000
        for _ in range(draws):
            plan = build_plan(1, 1, 2, rng)
            first_is_decoy += plan.tuples[0].kind == KIND_DECOY
        assert abs(first_is_decoy / draws - 0.5) < 0.02

    @given(st.integers(1, 8), st.integers(0, 8), st.integers(2, 4), st.integers(0, 2**16))
    @settings(max_examples=60, deadline=None)
    def test_plan_invariants(self, m, d, n, seed):
        plan = build_plan(m, d, n, np.random.default_rng(seed))
        assert sorted(plan.order) == list(range(m + d))
        assert all(t.stream_position == pos for pos, t in enumerate(plan.tuples))
        decoys = [pos for pos, t in enumerate(plan.tuples) if t.kind == KIND_DECOY]
        assert tuple(decoys) == plan.decoy_positions
        for pos in decoys:
            assert plan.position_map[pos] == plan.tuples[pos].decoy_prep


class TestDispatch:
    def test_three_party_addressing(self, rng):
        plan = build_plan(1, 0, 3, rng)
        table = dispatch(plan)
        assert table.broker[0].qubit == 2
        assert table.agents[1][0].qubit == 1
        assert table.agents[0][0].qubit == 0

    def test_transmitted_count(self, rng):
        m, d, n = 6, 4, 3
        plan = build_plan(m, d, n, rng)
        table = dispatch(plan)
        assert len(table.transmitted) == (m + d) * (n - 1)
        decoy_addresses = [
            a for a in table.transmitted if a.stream_position in plan.position_map
        ]
        assert len(decoy_addresses) == d * (n - 1)
