"""End-to-end tests of the two-party session, its transports and aborts."""

import struct
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvot import core, gaussmodel, protocol, rateengine, recon
from cvot.core import (
    DiscretizationScheme,
    EpsilonBudget,
    InvalidParams,
    MemoryAssumption,
    ProtocolAbort,
    SeededRng,
)

SCHEME_NAT = DiscretizationScheme(0.1, 51.2, 10).scaled(core.SNU_QUAD_SCALE)
SOURCE = gaussmodel.SourceModel.tuned(4.838 * core.SNU_QUAD_SCALE, 0.996)
MEMORY = MemoryAssumption(encoding="gaussian", nu=0.001, eta=0.75, n_max=100.0, xi=1.0)


def make_params(**over):
    kw = dict(n_pulses=2400, n_symbols=1000, scheme=SCHEME_NAT, source=SOURCE,
              budget=EpsilonBudget(eps_a=1e-7), memory=MEMORY, code_rate=0.94,
              code_seed=404, records_seed=11)
    kw.update(over)
    return protocol.SessionParams(**kw)


class TestFraming:
    @given(st.integers(min_value=0, max_value=255), st.binary(max_size=2048))
    @settings(max_examples=50)
    def test_round_trip(self, tag, payload):
        assert protocol.decode_frame(protocol.encode_frame(tag, payload)) == (tag, payload)

    def test_tag_range(self):
        with pytest.raises(InvalidParams):
            protocol.encode_frame(256, b"")

    def test_size_cap(self):
        with pytest.raises(InvalidParams):
            protocol.encode_frame(1, b"\x00" * (protocol.MAX_FRAME + 1))

    def test_decode_rejects_truncation(self):
        frame = protocol.encode_frame(7, b"hello")
        with pytest.raises(InvalidParams):
            protocol.decode_frame(frame[:-1])
        with pytest.raises(InvalidParams):
            protocol.decode_frame(frame + b"!")
        with pytest.raises(InvalidParams):
            protocol.decode_frame(b"\x01\x00")


class TestTransports:
    def test_queue_round_trip(self):
        a, b = protocol.queue_pair()
        a.send(protocol.MSG_BASES, b"\xaa\xbb")
        assert b.recv() == (protocol.MSG_BASES, b"\xaa\xbb")
        b.send(protocol.MSG_ABORT, b"r|d")
        assert a.recv() == (protocol.MSG_ABORT, b"r|d")

    def test_queue_timeout(self):
        a, _ = protocol.queue_pair(timeout=0.05)
        with pytest.raises(ProtocolAbort) as exc:
            a.recv()
        assert exc.value.reason == "AbortTimeout"

    def test_recording_wrapper(self):
        a, b = protocol.queue_pair()
        rec = protocol.RecordingTransport(a)
        rec.send(protocol.MSG_BASES, b"xyz")
        assert b.recv() == (protocol.MSG_BASES, b"xyz")
        b.send(protocol.MSG_SYNDROMES, b"")
        rec.recv()
        dirs = [(d, tag, n) for d, tag, n, _ in rec.log]
        assert dirs == [("send", protocol.MSG_BASES, 3),
                        ("recv", protocol.MSG_SYNDROMES, 0)]
        assert all(len(h) == 64 for _, _, _, h in rec.log)


class TestSessionParams:
    def test_size_relation(self):
        with pytest.raises(InvalidParams):
            make_params(n_symbols=1300).validated()      # 2*1300 > 2400
        with pytest.raises(InvalidParams):
            make_params(n_pulses=1).validated()
        with pytest.raises(InvalidParams):
            make_params(code_rate=1.0).validated()
        with pytest.raises(InvalidParams):
            make_params(wait_seconds=-1.0).validated()
        with pytest.raises(InvalidParams):
            make_params(formula="figure").validated()

    def test_secure_output_length_sizing(self):
        # the accounting runs on n = 2 * n_symbols effective pulses
        params = make_params(n_pulses=20000, n_symbols=9600)
        res = protocol.secure_output_length(params)
        stats = gaussmodel.channel_stats(SOURCE)
        cm = gaussmodel.epr_covariance(SOURCE)
        direct = rateengine.secure_length(rateengine.RateInputs(
            n=19200.0, scheme=SCHEME_NAT, sigma_a=stats.sigma_a, rho=stats.rho,
            r_ec=recon.leakage_per_symbol(0.94), budget=params.budget,
            memory=MEMORY, formula="half_margin",
            p_out=gaussmodel.p_outside_range(cm, SCHEME_NAT)))
        assert res == direct
        assert res.ell == 3103    # regression pin for the benchmark session size


class TestHonestRuns:
    @pytest.mark.parametrize("t", [0, 1])
    def test_queue_session(self, t):
        alice, bob = protocol.run_rot(make_params(), session_seed=52, t=t,
                                      ell_override=256)
        assert alice.phase == "done" and bob.phase == "done"
        assert alice.ell == bob.ell == 256
        assert alice.s0.size == alice.s1.size == 256
        assert bob.decode_ok and bob.decode_iters <= 30
        want = alice.s0 if t == 0 else alice.s1
        assert np.array_equal(bob.s_t, want)
        assert alice.view.set_sizes == bob.set_sizes
        assert min(bob.set_sizes) >= 1000

    def test_deterministic(self):
        a1, b1 = protocol.run_rot(make_params(), session_seed=52, t=0, ell_override=64)
        a2, b2 = protocol.run_rot(make_params(), session_seed=52, t=0, ell_override=64)
        assert np.array_equal(a1.s0, a2.s0) and np.array_equal(a1.s1, a2.s1)
        assert np.array_equal(b1.s_t, b2.s_t)

    def test_session_seed_changes_hashes(self):
        a1, _ = protocol.run_rot(make_params(), session_seed=52, t=0, ell_override=64)
        a2, _ = protocol.run_rot(make_params(), session_seed=53, t=0, ell_override=64)
        assert not np.array_equal(a1.s0, a2.s0)

    def test_tcp_session(self):
        alice, bob, elapsed = protocol.run_rot_tcp(make_params(), session_seed=99, t=1,
                                                   ell_override=128)
        assert alice.phase == "done" and bob.phase == "done"
        assert np.array_equal(bob.s_t, alice.s1)
        assert elapsed > 0.0

    @pytest.mark.parametrize("t", [0, 1])
    def test_ot_wrapper(self, t):
        gen = SeededRng(1234).generator()
        x0 = gen.integers(0, 2, size=96, dtype=np.uint8)
        x1 = gen.integers(0, 2, size=96, dtype=np.uint8)
        alice, bob, recovered = protocol.ot_from_rot(make_params(), session_seed=5,
                                                     t=t, x0=x0, x1=x1,
                                                     ell_override=96)
        assert alice.phase == "done" and bob.phase == "done"
        assert np.array_equal(recovered, x0 if t == 0 else x1)


class TestAborts:
    def test_short_sets(self):
        # 240 pulses splitting ~120/120 cannot fill two sets of 119 for every
        # record seed; this one lands short and the session must abort
        params = make_params(n_pulses=240, n_symbols=119, records_seed=0)
        alice, bob = protocol.run_rot(params, session_seed=1, t=0, ell_override=8)
        assert bob.phase == "aborted" and bob.abort_reason == "AbortShortSets"
        assert alice.phase == "aborted" and alice.abort_reason == "AbortShortSets"
        assert min(bob.set_sizes) < 119

    def test_out_of_range(self):
        # a cutoff at 2 natural units is far inside the sender marginal
        tiny = DiscretizationScheme(2.0 * 2.0 / 1024, 2.0, 10)
        alice, bob = protocol.run_rot(make_params(scheme=tiny), session_seed=1, t=0,
                                      ell_override=8)
        assert alice.phase == "aborted" and alice.abort_reason == "AbortOutOfRange"
        assert bob.phase == "aborted" and bob.abort_reason == "AbortOutOfRange"

    def test_no_key_at_tiny_size(self):
        params = make_params(n_pulses=240, n_symbols=100, records_seed=11,
                             code_rate=0.7)
        alice, bob = protocol.run_rot(params, session_seed=1, t=0)
        assert alice.phase == "aborted" and alice.abort_reason == "AbortNoKey"
        assert bob.phase == "aborted" and bob.abort_reason == "AbortNoKey"

    def test_descriptor_mismatch(self):
        # the two sides disagree on ell: the receiver must refuse the hash
        ta, tb = protocol.queue_pair()
        params = make_params()
        th, box = protocol._in_thread(protocol.run_alice, ta, params,
                                      SeededRng(7, stream=1), None, 100)
        bob = protocol.run_bob(tb, params, t=0, ell_override=200)
        th.join(timeout=60.0)
        assert bob.phase == "aborted" and bob.abort_reason == "AbortParams"
        assert box["result"].phase == "done"   # sender finished before the refusal

    def test_unexpected_tag(self):
        ta, tb = protocol.queue_pair()
        ta.send(protocol.MSG_SYNDROMES, b"")
        bob = protocol.run_bob(tb, make_params(), t=0, ell_override=8)
        assert bob.phase == "aborted" and bob.abort_reason == "AbortMalformed"

    def test_receiver_timeout(self):
        _, tb = protocol.queue_pair(timeout=0.05)
        bob = protocol.run_bob(tb, make_params(), t=0, ell_override=8)
        assert bob.phase == "aborted" and bob.abort_reason == "AbortTimeout"

    def test_invalid_choice_bit(self):
        _, tb = protocol.queue_pair(timeout=0.05)
        with pytest.raises(InvalidParams):
            protocol.run_bob(tb, make_params(), t=2)


class TestPrivacyCheck:
    PARAMS = make_params(n_pulses=240, n_symbols=64)

    def test_tiny_sample_is_inconclusive(self):
        rep = protocol.receiver_privacy_check(self.PARAMS, n_runs=5, seed=1)
        assert rep.verdict == "inconclusive"
        assert rep.p_values == {}

    def test_honest_receiver_consistent(self):
        rep = protocol.receiver_privacy_check(self.PARAMS, n_runs=40, seed=2024)
        assert rep.verdict == "consistent"
        assert set(rep.p_values) == {"first_bit", "mask_weight", "mean_index"}
        assert min(rep.p_values.values()) >= rep.alpha / 3

    def test_marked_receiver_leaks(self):
        rep = protocol.receiver_privacy_check(self.PARAMS, n_runs=40, seed=2024,
                                              mark_choice=True)
        assert rep.verdict == "leaky"
        # the planted signal sits in the first mask bit
        assert rep.p_values["first_bit"] < 1e-10
