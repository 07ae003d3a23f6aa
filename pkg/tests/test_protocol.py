import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzcast.adversary import ALWAYS_COMPUTATIONAL, MEASURE_RESEND, EveStrategy
from ghzcast.bitvec import BitVector, concat_secrets, xor_all
from ghzcast.protocol import (
    BROKER,
    STAGE_DECRYPTION,
    STAGE_DISTRIBUTION,
    STAGE_EMBEDDING,
    STAGE_EXCHANGE,
    STAGE_PREAMBLE,
    STAGE_RECOVERY,
    STAGE_VALIDATION,
    ClassicalMessage,
    Scenario,
    Transcript,
    check_transcript_secrecy,
    execute_run,
    recover_secret,
    run_protocol,
)


class TestScenario:
    def test_d_defaults_to_payload_length(self, example_secrets):
        sc = Scenario(n=3, secrets=example_secrets)
        assert sc.resolved_d == 6
        assert Scenario(n=3, secrets=example_secrets, d=9).resolved_d == 9

    def test_validation(self, example_secrets):
        with pytest.raises(ValueError):
            Scenario(n=1, secrets=())
        with pytest.raises(ValueError):
            Scenario(n=3, secrets=example_secrets[:1])
        with pytest.raises(ValueError):
            Scenario(n=3, secrets=example_secrets, noise_p=1.5)
        with pytest.raises(ValueError):
            Scenario(n=3, secrets=example_secrets, threshold_fraction=0.0)
        with pytest.raises(ValueError):
            Scenario(n=2, secrets=(BitVector.from_text(""),))
        with pytest.raises(ValueError):
            # k exceeds the transmitted qubits per tuple
            Scenario(
                n=2,
                secrets=(BitVector.from_text("1"),),
                eve=EveStrategy(tag="intercept_replace", k=2),
            )


class TestHonestRun:
    def test_example_recovery(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        assert not transcript.aborted
        assert transcript.recovered == example_secrets

    def test_stage_sequence(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        assert transcript.stages == (
            STAGE_PREAMBLE,
            STAGE_DISTRIBUTION,
            STAGE_VALIDATION,
            STAGE_EMBEDDING,
            STAGE_DECRYPTION,
            STAGE_EXCHANGE,
            STAGE_RECOVERY,
        )

    def test_register_fold_equals_payload(self, example_secrets):
        sc = Scenario(n=3, secrets=example_secrets, seed=3)
        payload, _ = concat_secrets(example_secrets)
        for seed in range(30):
            transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=seed))
            registers = transcript.registers
            assert xor_all([registers.broker, *registers.agents]) == payload

    def test_validation_is_clean_without_noise(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        assert transcript.validation.errors == 0
        assert transcript.validation.verdict == "pass"
        assert transcript.validation.decoy_checks == 12

    def test_no_decoys_passes_trivially(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, d=0, seed=12))
        assert transcript.validation.decoy_checks == 0
        assert not transcript.aborted
        assert transcript.recovered == example_secrets

    def test_determinism(self, example_secrets):
        sc = Scenario(n=3, secrets=example_secrets, d=20, seed=77)
        a = run_protocol(sc)
        b = run_protocol(sc)
        assert a == b

    def test_seed_changes_stream(self, example_secrets):
        a = run_protocol(Scenario(n=3, secrets=example_secrets, seed=1))
        b = run_protocol(Scenario(n=3, secrets=example_secrets, seed=2))
        assert a.decoy_positions != b.decoy_positions or a.registers != b.registers

    @given(
        st.integers(2, 6),
        st.integers(0, 2**16),
        st.data(),
    )
    @settings(max_examples=25, deadline=None)
    def test_recovery_for_any_shape(self, n, seed, data):
        secrets = tuple(
            BitVector(data.draw(st.integers(0, (1 << m) - 1)), m)
            for m in data.draw(
                st.lists(st.integers(1, 4), min_size=n - 1, max_size=n - 1)
            )
        )
        transcript = run_protocol(Scenario(n=n, secrets=secrets, d=4, seed=seed))
        assert not transcript.aborted
        assert transcript.recovered == secrets


class TestMessages:
    def test_exchange_message_count(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        exchange = [m for m in transcript.messages if m.stage == STAGE_EXCHANGE]
        n = 3
        assert len(exchange) == (n - 1) + (n - 1) * (n - 2)

    def test_broker_sends_each_agent_their_segment(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        registers = transcript.registers
        by_receiver = {
            m.receiver: m.payload
            for m in transcript.messages
            if m.stage == STAGE_EXCHANGE and m.sender == BROKER
        }
        assert by_receiver["agent_0"] == str(registers.broker)[3:]
        assert by_receiver["agent_1"] == str(registers.broker)[:3]

    def test_cross_agent_segments(self, example_secrets):
        # agent_1 receives segment 1 of agent_0's register and vice versa
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        registers = transcript.registers
        cross = {
            (m.sender, m.receiver): m.payload
            for m in transcript.messages
            if m.stage == STAGE_EXCHANGE and m.sender != BROKER
        }
        assert cross[("agent_0", "agent_1")] == str(registers.agents[0])[:3]
        assert cross[("agent_1", "agent_0")] == str(registers.agents[1])[3:]

    def test_no_agent_to_broker_after_validation(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        for m in transcript.messages:
            if m.stage in (STAGE_EMBEDDING, STAGE_DECRYPTION, STAGE_EXCHANGE, STAGE_RECOVERY):
                assert m.receiver != BROKER

    def test_validation_reports_flow_to_broker(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        reports = [
            m
            for m in transcript.messages
            if m.stage == STAGE_VALIDATION and m.receiver == BROKER
        ]
        assert len(reports) == 2
        assert all(m.label == "decoy_outcomes" for m in reports)


class TestAbort:
    def test_abort_precedes_embedding(self, example_secrets):
        eve = EveStrategy(tag=MEASURE_RESEND, basis_policy=ALWAYS_COMPUTATIONAL)
        transcript = run_protocol(
            Scenario(n=3, secrets=example_secrets, d=200, eve=eve, seed=4)
        )
        assert transcript.aborted
        assert transcript.stages == (STAGE_PREAMBLE, STAGE_DISTRIBUTION, STAGE_VALIDATION)
        assert STAGE_EMBEDDING not in transcript.stages
        assert transcript.registers is None
        assert transcript.recovered is None

    def test_aborted_run_has_no_exchange_traffic(self, example_secrets):
        eve = EveStrategy(tag=MEASURE_RESEND, basis_policy=ALWAYS_COMPUTATIONAL)
        transcript = run_protocol(
            Scenario(n=3, secrets=example_secrets, d=200, eve=eve, seed=4)
        )
        assert all(m.stage in (STAGE_PREAMBLE, STAGE_VALIDATION) for m in transcript.messages)

    def test_threshold_boundary(self, example_secrets):
        # 12 checks at fraction 1/8 aborts from 1.5, so from the 2nd error on
        sc = Scenario(n=3, secrets=example_secrets, seed=12)
        transcript = run_protocol(sc)
        assert transcript.validation.threshold == pytest.approx(1.5)

    def test_heavy_noise_aborts(self, example_secrets):
        aborted = 0
        for seed in range(40):
            transcript = run_protocol(
                Scenario(n=3, secrets=example_secrets, d=24, noise_p=0.5, seed=seed)
            )
            aborted += transcript.aborted
        assert aborted == 40

    def test_light_noise_mostly_passes(self, example_secrets):
        aborted = 0
        for seed in range(40):
            transcript = run_protocol(
                Scenario(n=3, secrets=example_secrets, d=24, noise_p=0.01, seed=seed)
            )
            aborted += transcript.aborted
        assert aborted < 10


class TestRecoverSecret:
    def test_all_zero_registers(self):
        from ghzcast.bitvec import SegmentLayout

        layout = SegmentLayout((2, 2))
        zero = BitVector.zeros(4)
        received = {BROKER: BitVector.zeros(2), 1: BitVector.zeros(2)}
        assert recover_secret(0, zero, received, layout) == BitVector.zeros(2)

    def test_missing_segment_raises(self):
        from ghzcast.bitvec import SegmentLayout

        layout = SegmentLayout((2, 2))
        with pytest.raises(ValueError):
            recover_secret(0, BitVector.zeros(4), {BROKER: BitVector.zeros(2)}, layout)


class TestSecrecyChecker:
    def test_clean_transcript(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        assert check_transcript_secrecy(transcript) == []

    def test_flags_agent_to_broker_leak(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        bad = ClassicalMessage(
            stage=STAGE_EXCHANGE,
            sender="agent_0",
            receiver=BROKER,
            label="register_segment",
            payload="000",
            segment_index=1,
        )
        tampered = Transcript(
            n=transcript.n,
            layout=transcript.layout,
            stream_length=transcript.stream_length,
            decoy_positions=transcript.decoy_positions,
            stages=transcript.stages,
            messages=transcript.messages + (bad,),
            validation=transcript.validation,
            aborted=transcript.aborted,
            registers=transcript.registers,
            recovered=transcript.recovered,
        )
        violations = check_transcript_secrecy(tampered)
        assert len(violations) == 1
        assert "broker" in violations[0]

    def test_flags_own_segment_transmission(self, example_secrets):
        transcript = run_protocol(Scenario(n=3, secrets=example_secrets, seed=12))
        bad = ClassicalMessage(
            stage=STAGE_EXCHANGE,
            sender="agent_1",
            receiver="agent_0",
            label="register_segment",
            payload="000",
            segment_index=1,
        )
        tampered = Transcript(
            n=transcript.n,
            layout=transcript.layout,
            stream_length=transcript.stream_length,
            decoy_positions=transcript.decoy_positions,
            stages=transcript.stages,
            messages=transcript.messages + (bad,),
            validation=transcript.validation,
            aborted=transcript.aborted,
            registers=transcript.registers,
            recovered=transcript.recovered,
        )
        violations = check_transcript_secrecy(tampered)
        assert len(violations) == 1
        assert "own segment" in violations[0]


def test_run_outcome_carries_dispatch(example_secrets):
    outcome = execute_run(Scenario(n=3, secrets=example_secrets, seed=12))
    table = outcome.dispatch_table
    assert table.broker[0].qubit == 2
    assert len(table.transmitted) == 12 * 2
