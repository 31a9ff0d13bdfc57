r"""Randomized 1-of-2 oblivious transfer over a simulated EPR link.

The sender ends up with two uniform ell-bit strings (s_0, s_1) and the
receiver with his choice bit t and s_t only; masking a pair of input
messages with (s_0, s_1) turns this into ordinary oblivious transfer.
Security against a cheating receiver rests on a waiting period that
forces any stored quantum side information through a lossy, bounded
memory; the accounting lives in :mod:`cvot.rateengine`.

Session flow (tags in parentheses):

1. both parties draw the entangled measurement records — here a shared
   seeded sampler standing in for the optical link, with each side
   reading only its own columns;
2. the sender checks her outcomes against the binning range and waits
   out the storage delay;
3. she reveals her basis string (BASES); the receiver partitions the
   indices into the matched set, labelled I_t, and the rest (INDEX_SETS
   carries the I_0 membership mask, so the labelling hides t);
4. both sides truncate each set to the agreed size; the sender
   discloses, per set, the low 4-bit plane and the GF(64) syndrome of
   the high plane (SYNDROMES), which the receiver decodes on his good
   set only — the sender never learns whether decoding worked;
5. the sender draws one Toeplitz descriptor per set (HASH_DESC) and
   hashes her own symbol strings into (s_0, s_1); the receiver hashes
   his reconstruction into s_t.

Frames are little-endian: u32 payload length, u8 tag, payload bytes.
Both the in-process queue transport and the TCP transport move the same
serialized frames.
"""

from __future__ import annotations

import dataclasses
import hashlib
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats

from . import gaussmodel, hashing, rateengine, recon
from .core import (DecodeFailure, DiscretizationScheme, EpsilonBudget,
                   InfeasibleBudget, InvalidParams, MemoryAssumption,
                   ProtocolAbort, SeededRng)

MAX_FRAME = 64 * 1024 * 1024

MSG_BASES = 1
MSG_INDEX_SETS = 2
MSG_SYNDROMES = 3
MSG_HASH_DESC = 4
MSG_MASKED_STRINGS = 5
MSG_ABORT = 255

PHASES = ("setup", "measure", "wait", "basis_reveal", "sift",
          "reconcile", "amplify", "done", "aborted")


# ---------------------------------------------------------------------------
# framing and transports
# ---------------------------------------------------------------------------

def encode_frame(tag: int, payload: bytes) -> bytes:
    if not 0 <= tag <= 255:
        raise InvalidParams([("InvalidFrame", f"tag must be a byte, got {tag}")])
    if len(payload) > MAX_FRAME:
        raise InvalidParams([("InvalidFrame", f"payload of {len(payload)} bytes exceeds cap")])
    return struct.pack("<I", len(payload)) + bytes([tag]) + payload


def decode_frame(data: bytes) -> tuple[int, bytes]:
    if len(data) < 5:
        raise InvalidParams([("InvalidFrame", "frame shorter than its header")])
    (length,) = struct.unpack("<I", data[:4])
    if length > MAX_FRAME or len(data) != 5 + length:
        raise InvalidParams([("InvalidFrame", "frame length field does not match payload")])
    return data[4], data[5:]


class QueueTransport:
    """In-process endpoint; frames are fully serialized, then re-parsed."""

    def __init__(self, outbox: queue.Queue, inbox: queue.Queue, timeout: float = 60.0):
        self._out = outbox
        self._in = inbox
        self._timeout = timeout

    def send(self, tag: int, payload: bytes) -> None:
        self._out.put(encode_frame(tag, payload))

    def recv(self) -> tuple[int, bytes]:
        try:
            return decode_frame(self._in.get(timeout=self._timeout))
        except queue.Empty:
            raise ProtocolAbort("AbortTimeout", "peer sent nothing before the timeout")

    def close(self) -> None:
        pass


def queue_pair(timeout: float = 60.0) -> tuple[QueueTransport, QueueTransport]:
    ab: queue.Queue = queue.Queue()
    ba: queue.Queue = queue.Queue()
    return QueueTransport(ab, ba, timeout), QueueTransport(ba, ab, timeout)


class SocketTransport:
    """Frame transport over a connected stream socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock

    def send(self, tag: int, payload: bytes) -> None:
        self._sock.sendall(encode_frame(tag, payload))

    def _recv_exact(self, n: int) -> bytes:
        chunks = []
        while n:
            part = self._sock.recv(min(n, 1 << 20))
            if not part:
                raise ProtocolAbort("AbortConnection", "peer closed the connection")
            chunks.append(part)
            n -= len(part)
        return b"".join(chunks)

    def recv(self) -> tuple[int, bytes]:
        header = self._recv_exact(5)
        (length,) = struct.unpack("<I", header[:4])
        if length > MAX_FRAME:
            raise ProtocolAbort("AbortMalformed", f"announced payload of {length} bytes exceeds cap")
        return header[4], self._recv_exact(length)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class RecordingTransport:
    """Wrap a transport and log (direction, tag, nbytes, sha256) per frame."""

    def __init__(self, inner):
        self._inner = inner
        self.log: list[tuple[str, int, int, str]] = []

    def send(self, tag: int, payload: bytes) -> None:
        self.log.append(("send", tag, len(payload), hashlib.sha256(payload).hexdigest()))
        self._inner.send(tag, payload)

    def recv(self) -> tuple[int, bytes]:
        tag, payload = self._inner.recv()
        self.log.append(("recv", tag, len(payload), hashlib.sha256(payload).hexdigest()))
        return tag, payload

    def close(self) -> None:
        self._inner.close()


# ---------------------------------------------------------------------------
# session parameters and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionParams:
    """Everything both parties agree on before a session starts."""

    n_pulses: int
    n_symbols: int
    scheme: DiscretizationScheme
    source: gaussmodel.SourceModel
    budget: EpsilonBudget
    memory: MemoryAssumption
    code_rate: float
    code_seed: int
    records_seed: int
    wait_seconds: float = 0.0
    formula: str = "half_margin"

    def issues(self) -> list[tuple[str, str]]:
        out = []
        out.extend(self.scheme.issues())
        out.extend(self.source.issues())
        out.extend(self.budget.issues())
        out.extend(self.memory.issues())
        if self.n_pulses < 2:
            out.append(("InvalidSession", f"n_pulses must be >= 2, got {self.n_pulses}"))
        if not (0 < self.n_symbols * 2 <= self.n_pulses):
            out.append(("InvalidSession",
                        f"need 0 < 2 n_symbols <= n_pulses, got ({self.n_symbols}, {self.n_pulses})"))
        if not (0.0 < self.code_rate < 1.0):
            out.append(("InvalidSession", f"code_rate must be in (0, 1), got {self.code_rate}"))
        if self.wait_seconds < 0:
            out.append(("InvalidSession", f"wait_seconds must be >= 0, got {self.wait_seconds}"))
        if self.formula not in rateengine.FORMULAS:
            out.append(("InvalidSession", f"unknown formula {self.formula!r}"))
        return out

    def validated(self) -> "SessionParams":
        issues = self.issues()
        if issues:
            raise InvalidParams(issues)
        return self


def secure_output_length(params: SessionParams,
                         lam_cache: dict | None = None) -> rateengine.RateResult:
    """Honest output length for a session: both sets hold n_symbols symbols."""
    stats = gaussmodel.channel_stats(params.source)
    cm = gaussmodel.epr_covariance(params.source)
    inputs = rateengine.RateInputs(
        n=2.0 * params.n_symbols,
        scheme=params.scheme,
        sigma_a=stats.sigma_a,
        rho=stats.rho,
        r_ec=recon.leakage_per_symbol(params.code_rate),
        budget=params.budget,
        memory=params.memory,
        formula=params.formula,
        p_out=gaussmodel.p_outside_range(cm, params.scheme),
    )
    return rateengine.secure_length(inputs, lam_cache=lam_cache)


@dataclass
class AliceView:
    """What the sender observes; the receiver-privacy check feeds on this."""

    index_mask: np.ndarray | None = None    # bool array, True where i is in I_0
    set_sizes: tuple[int, int] | None = None


@dataclass
class AliceResult:
    phase: str
    abort_reason: str = ""
    ell: int = 0
    s0: np.ndarray | None = None
    s1: np.ndarray | None = None
    view: AliceView = field(default_factory=AliceView)


@dataclass
class BobResult:
    phase: str
    t: int
    abort_reason: str = ""
    ell: int = 0
    s_t: np.ndarray | None = None
    decode_ok: bool = False
    decode_iters: int = 0
    set_sizes: tuple[int, int] | None = None


# ---------------------------------------------------------------------------
# payload helpers
# ---------------------------------------------------------------------------

def _pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def _unpack_bits(data: bytes, n: int) -> np.ndarray:
    if len(data) != (n + 7) // 8:
        raise ProtocolAbort("AbortMalformed", f"expected {(n + 7) // 8} bytes for {n} bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")[:n]


def _pack_low_plane(low: np.ndarray) -> bytes:
    return hashing.bits_to_bytes(hashing.serialize_symbols(low.astype(np.int64) + 1, bits=4))


def _unpack_low_plane(data: bytes, n: int) -> np.ndarray:
    bits = _unpack_bits(data, 4 * n).reshape(n, 4)
    return (bits * (1 << np.arange(4))).sum(axis=1).astype(np.uint8)


def _send_abort(transport, reason: str, detail: str = "") -> None:
    try:
        transport.send(MSG_ABORT, f"{reason}|{detail}".encode())
    except Exception:
        pass


def _expect(transport, tag: int) -> bytes:
    got, payload = transport.recv()
    if got == MSG_ABORT:
        reason, _, detail = payload.decode(errors="replace").partition("|")
        raise ProtocolAbort(reason or "AbortRemote", detail)
    if got != tag:
        raise ProtocolAbort("AbortMalformed", f"expected message tag {tag}, got {got}")
    return payload


def _truncated_sets(mask: np.ndarray, n_symbols: int) -> tuple[np.ndarray, np.ndarray]:
    i0 = np.flatnonzero(mask)
    i1 = np.flatnonzero(~mask)
    if i0.size < n_symbols or i1.size < n_symbols:
        raise ProtocolAbort("AbortShortSets",
                            f"index sets of sizes ({i0.size}, {i1.size}) cannot fill {n_symbols}")
    return i0[:n_symbols], i1[:n_symbols]


# ---------------------------------------------------------------------------
# party state machines
# ---------------------------------------------------------------------------

def run_alice(transport, params: SessionParams, rng: SeededRng,
              stop_after: str | None = None,
              ell_override: int | None = None) -> AliceResult:
    """Drive the sender through a session; returns instead of raising on abort."""
    params.validated()
    res = AliceResult(phase="setup")
    try:
        records = gaussmodel.sample_records(params.source, params.n_pulses,
                                            SeededRng(params.records_seed))
        bases = records["basis_a"]
        values = records["value_a"]

        res.phase = "measure"
        if np.any(np.abs(values) > params.scheme.alpha_cut):
            raise ProtocolAbort("AbortOutOfRange",
                                "sender outcome beyond the binning range")

        res.phase = "wait"
        if params.wait_seconds:
            time.sleep(params.wait_seconds)

        res.phase = "basis_reveal"
        transport.send(MSG_BASES, _pack_bits(bases))

        res.phase = "sift"
        mask = _unpack_bits(_expect(transport, MSG_INDEX_SETS), params.n_pulses).astype(bool)
        res.view.index_mask = mask
        res.view.set_sizes = (int(mask.sum()), int((~mask).sum()))
        sets = _truncated_sets(mask, params.n_symbols)
        if stop_after == "sift":
            return res

        res.phase = "reconcile"
        code = recon.build_code(params.n_symbols, params.code_rate, params.code_seed)
        symbols = []
        payload = struct.pack("<II", params.n_symbols, code.m)
        for idx in sets:
            z = gaussmodel.discretize(values[idx], params.scheme)
            low, high = recon.split_planes(z)
            payload += _pack_low_plane(low) + recon.syndrome(code, high).tobytes()
            symbols.append(z)
        transport.send(MSG_SYNDROMES, payload)

        res.phase = "amplify"
        if ell_override is not None:
            ell = int(ell_override)
        else:
            ell = secure_output_length(params).ell
        if ell < 1:
            raise ProtocolAbort("AbortNoKey", "secure length is zero at this operating point")
        res.ell = ell
        m_bits = hashing.SYMBOL_BITS * params.n_symbols
        descs = [hashing.sample_hash(m_bits, ell, rng.child(11 + b)) for b in (0, 1)]
        blob = b""
        for d in descs:
            enc = hashing.encode_descriptor(d)
            blob += struct.pack("<I", len(enc)) + enc
        transport.send(MSG_HASH_DESC, blob)
        res.s0 = hashing.apply_hash(descs[0], hashing.serialize_symbols(symbols[0]))
        res.s1 = hashing.apply_hash(descs[1], hashing.serialize_symbols(symbols[1]))
        res.phase = "done"
        return res
    except ProtocolAbort as ab:
        if ab.reason not in ("AbortRemote", "AbortTimeout", "AbortConnection"):
            _send_abort(transport, ab.reason, ab.detail)
        res.phase = "aborted"
        res.abort_reason = ab.reason
        return res
    except (InfeasibleBudget,) as ex:
        _send_abort(transport, "AbortNoKey", str(ex))
        res.phase = "aborted"
        res.abort_reason = "AbortNoKey"
        return res


def run_bob(transport, params: SessionParams, t: int,
            stop_after: str | None = None,
            ell_override: int | None = None,
            mark_choice: bool = False) -> BobResult:
    """Drive the receiver with choice bit t.

    ``mark_choice`` is a deliberately broken receiver used as the negative
    control of the privacy check: it copies t into the first bit of the
    index-set mask, which an inspecting sender can read off directly.
    """
    params.validated()
    if t not in (0, 1):
        raise InvalidParams([("InvalidSession", f"choice bit must be 0 or 1, got {t}")])
    res = BobResult(phase="setup", t=t)
    try:
        records = gaussmodel.sample_records(params.source, params.n_pulses,
                                            SeededRng(params.records_seed))
        bases = records["basis_b"]
        values = records["value_b"]

        res.phase = "wait"
        if params.wait_seconds:
            time.sleep(params.wait_seconds)

        res.phase = "basis_reveal"
        alice_bases = _unpack_bits(_expect(transport, MSG_BASES), params.n_pulses)

        res.phase = "sift"
        matched = alice_bases == bases
        # I_0 gets the matched indices when t = 0, the unmatched ones when t = 1
        mask = matched ^ bool(t)
        if mark_choice:
            mask = mask.copy()
            mask[0] = bool(t)
        sizes = (int(mask.sum()), int((~mask).sum()))
        res.set_sizes = sizes
        if min(sizes) < params.n_symbols:
            raise ProtocolAbort("AbortShortSets",
                                f"index sets of sizes {sizes} cannot fill {params.n_symbols}")
        transport.send(MSG_INDEX_SETS, _pack_bits(mask.astype(np.uint8)))
        sets = _truncated_sets(mask, params.n_symbols)
        if stop_after == "sift":
            return res

        res.phase = "reconcile"
        payload = _expect(transport, MSG_SYNDROMES)
        if len(payload) < 8:
            raise ProtocolAbort("AbortMalformed", "syndrome payload shorter than its header")
        n_sym, m_checks = struct.unpack("<II", payload[:8])
        code = recon.build_code(params.n_symbols, params.code_rate, params.code_seed)
        if n_sym != params.n_symbols or m_checks != code.m:
            raise ProtocolAbort("AbortMalformed", "syndrome payload disagrees with the session")
        low_bytes = (4 * n_sym + 7) // 8
        span = low_bytes + code.m
        if len(payload) != 8 + 2 * span:
            raise ProtocolAbort("AbortMalformed", "syndrome payload has the wrong length")
        part = payload[8 + t * span: 8 + (t + 1) * span]
        low = _unpack_low_plane(part[:low_bytes], n_sym)
        synd = np.frombuffer(part[low_bytes:], dtype=np.uint8)

        stats = gaussmodel.channel_stats(params.source)
        priors = recon.channel_priors(values[sets[t]], low, stats, params.scheme)
        try:
            high_hat, iters = recon.decode(code, synd, priors)
            res.decode_ok = True
            res.decode_iters = iters
        except DecodeFailure:
            # press on with the raw maximum-likelihood guess; the sender
            # must not be able to tell that decoding failed
            high_hat = np.argmax(priors, axis=1).astype(np.uint8)
        z_hat = recon.combine_planes(low, high_hat)

        res.phase = "amplify"
        blob = _expect(transport, MSG_HASH_DESC)
        descs = []
        off = 0
        for _ in range(2):
            if len(blob) < off + 4:
                raise ProtocolAbort("AbortMalformed", "hash descriptor blob truncated")
            (n_enc,) = struct.unpack("<I", blob[off:off + 4])
            off += 4
            if len(blob) < off + n_enc:
                raise ProtocolAbort("AbortMalformed", "hash descriptor blob truncated")
            descs.append(hashing.decode_descriptor(blob[off:off + n_enc]))
            off += n_enc
        if off != len(blob):
            raise ProtocolAbort("AbortMalformed", "trailing bytes after hash descriptors")

        if ell_override is not None:
            expected_ell = int(ell_override)
        else:
            expected_ell = secure_output_length(params).ell
        m_bits = hashing.SYMBOL_BITS * params.n_symbols
        for d in descs:
            if d.m != m_bits or d.ell != expected_ell:
                raise ProtocolAbort("AbortParams",
                                    f"descriptor of shape ({d.ell}, {d.m}) does not match "
                                    f"the agreed ({expected_ell}, {m_bits})")
        res.ell = expected_ell
        res.s_t = hashing.apply_hash(descs[t], hashing.serialize_symbols(z_hat))
        res.phase = "done"
        return res
    except ProtocolAbort as ab:
        if ab.reason not in ("AbortRemote", "AbortTimeout", "AbortConnection"):
            _send_abort(transport, ab.reason, ab.detail)
        res.phase = "aborted"
        res.abort_reason = ab.reason
        return res
    except (InfeasibleBudget,) as ex:
        _send_abort(transport, "AbortNoKey", str(ex))
        res.phase = "aborted"
        res.abort_reason = "AbortNoKey"
        return res


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _in_thread(fn, *args, **kwargs):
    box: dict = {}

    def target():
        try:
            box["result"] = fn(*args, **kwargs)
        except BaseException as ex:   # re-raised in the joining thread
            box["error"] = ex

    th = threading.Thread(target=target, daemon=True)
    th.start()
    return th, box


def run_rot(params: SessionParams, session_seed: int, t: int,
            stop_after: str | None = None, ell_override: int | None = None,
            mark_choice: bool = False,
            timeout: float = 120.0) -> tuple[AliceResult, BobResult]:
    """One in-process session; the two parties run on separate threads."""
    ta, tb = queue_pair(timeout=timeout)
    alice_rng = SeededRng(session_seed, stream=1)
    th, box = _in_thread(run_alice, ta, params, alice_rng,
                         stop_after=stop_after, ell_override=ell_override)
    bob = run_bob(tb, params, t, stop_after=stop_after,
                  ell_override=ell_override, mark_choice=mark_choice)
    th.join(timeout=timeout)
    if th.is_alive():
        raise ProtocolAbort("AbortTimeout", "sender thread failed to finish")
    if "error" in box:
        raise box["error"]
    return box["result"], bob


def run_rot_tcp(params: SessionParams, session_seed: int, t: int,
                host: str = "127.0.0.1", port: int = 0,
                ell_override: int | None = None,
                timeout: float = 120.0) -> tuple[AliceResult, BobResult, float]:
    """One session over localhost TCP; returns wall-clock seconds as well."""
    ready: queue.Queue = queue.Queue()

    def alice_side():
        server = socket.create_server((host, port))
        server.settimeout(timeout)
        ready.put(server.getsockname()[1])
        conn, _ = server.accept()
        conn.settimeout(timeout)
        transport = SocketTransport(conn)
        try:
            return run_alice(transport, params, SeededRng(session_seed, stream=1),
                             ell_override=ell_override)
        finally:
            transport.close()
            server.close()

    th, box = _in_thread(alice_side)
    actual_port = ready.get(timeout=timeout)
    t0 = time.monotonic()
    sock = socket.create_connection((host, actual_port), timeout=timeout)
    transport = SocketTransport(sock)
    try:
        bob = run_bob(transport, params, t, ell_override=ell_override)
    finally:
        transport.close()
    elapsed = time.monotonic() - t0
    th.join(timeout=timeout)
    if th.is_alive():
        raise ProtocolAbort("AbortTimeout", "sender thread failed to finish")
    if "error" in box:
        raise box["error"]
    return box["result"], bob, elapsed


def ot_from_rot(params: SessionParams, session_seed: int, t: int,
                x0: np.ndarray, x1: np.ndarray,
                ell_override: int | None = None) -> tuple[AliceResult, BobResult, np.ndarray]:
    """Ordinary 1-of-2 OT of two ell-bit messages via the randomized protocol.

    After the randomized session, the sender transmits (x_0 xor s_0,
    x_1 xor s_1) and the receiver unmasks the branch he can open.  Returns
    the receiver's recovered message alongside both party results.
    """
    ta, tb = queue_pair()
    alice_rng = SeededRng(session_seed, stream=1)

    def alice_side():
        res = run_alice(ta, params, alice_rng, ell_override=ell_override)
        if res.phase == "done":
            masked = np.concatenate([np.asarray(x0, dtype=np.uint8) ^ res.s0,
                                     np.asarray(x1, dtype=np.uint8) ^ res.s1])
            ta.send(MSG_MASKED_STRINGS, struct.pack("<I", res.ell) + _pack_bits(masked))
        return res

    th, box = _in_thread(alice_side)
    bob = run_bob(tb, params, t, ell_override=ell_override)
    recovered = np.array([], dtype=np.uint8)
    if bob.phase == "done":
        payload = _expect(tb, MSG_MASKED_STRINGS)
        (ell,) = struct.unpack("<I", payload[:4])
        if ell != bob.ell:
            raise ProtocolAbort("AbortMalformed", "masked strings sized inconsistently")
        both = _unpack_bits(payload[4:], 2 * ell)
        recovered = both[t * ell:(t + 1) * ell] ^ bob.s_t
    th.join(timeout=120.0)
    if "error" in box:
        raise box["error"]
    x = np.asarray(x0 if t == 0 else x1, dtype=np.uint8)
    if x.size != recovered.size and bob.phase == "done":
        raise ProtocolAbort("AbortMalformed", "message length disagrees with ell")
    return box["result"], bob, recovered


# ---------------------------------------------------------------------------
# receiver-privacy diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrivacyReport:
    """Outcome of comparing sender views across the two choice bits."""

    n_runs: int
    p_values: dict[str, float]
    alpha: float
    verdict: str    # "consistent", "leaky" or "inconclusive"


def _view_features(view: AliceView) -> dict[str, float]:
    mask = view.index_mask
    idx = np.flatnonzero(mask)
    return {
        "first_bit": float(mask[0]),
        "mask_weight": float(mask.sum()),
        "mean_index": float(idx.mean()) if idx.size else 0.0,
    }


def receiver_privacy_check(params: SessionParams, n_runs: int, seed: int,
                           mark_choice: bool = False,
                           alpha: float = 0.01) -> PrivacyReport:
    """Empirical check that the sender's view carries no trace of t.

    Runs ``n_runs`` sift-only sessions per choice bit with fresh record
    seeds, extracts scalar features of the sender's view, and compares the
    two populations (Fisher's exact test for the binary feature, Mann-
    Whitney otherwise) with a Bonferroni-corrected threshold.  Fewer than
    30 runs per arm is reported as inconclusive rather than a clean bill.
    """
    root = SeededRng(seed, stream=77)
    samples: dict[int, list[dict[str, float]]] = {0: [], 1: []}
    for r in range(2 * n_runs):
        t = r % 2
        run_params = dataclasses.replace(
            params, records_seed=int(root.child(r).generator().integers(0, 2 ** 63)))
        alice, bob = run_rot(run_params, session_seed=seed + r, t=t,
                             stop_after="sift", mark_choice=mark_choice)
        if alice.phase == "aborted" or bob.phase == "aborted":
            continue
        samples[t].append(_view_features(alice.view))

    n0, n1 = len(samples[0]), len(samples[1])
    if min(n0, n1) < 30:
        return PrivacyReport(n_runs=n_runs, p_values={}, alpha=alpha,
                             verdict="inconclusive")

    p_values: dict[str, float] = {}
    a0 = int(sum(s["first_bit"] for s in samples[0]))
    a1 = int(sum(s["first_bit"] for s in samples[1]))
    table = [[a0, n0 - a0], [a1, n1 - a1]]
    p_values["first_bit"] = float(_stats.fisher_exact(table)[1])
    for name in ("mask_weight", "mean_index"):
        u0 = [s[name] for s in samples[0]]
        u1 = [s[name] for s in samples[1]]
        if np.ptp(u0 + u1) == 0.0:
            p_values[name] = 1.0
        else:
            p_values[name] = float(_stats.mannwhitneyu(u0, u1,
                                                       alternative="two-sided").pvalue)
    leaky = min(p_values.values()) < alpha / len(p_values)
    return PrivacyReport(n_runs=n_runs, p_values=p_values, alpha=alpha,
                         verdict="leaky" if leaky else "consistent")
