"""Round-by-round state machines for the four protocols.

Each round runs the carrier through the leg topology with the attack
hooks in path order: two-way rounds go sender -> [Eve] -> channel ->
encoder -> channel -> [Eve] -> sender, one-way rounds go preparer ->
[Eve] -> channel -> measurer.  Eve sits at the key party's doorstep, so
her substituted carriers traverse exactly the legs a genuine one would.

Mode scheduling, sifting, disturbance estimation and the abort rule
follow the per-protocol conventions documented on the operations below.
Per-round control-mode consistency checks:

* LM05    - a control round is valid when the encoder's announced
            measurement basis equals the preparer's basis; it fails when
            the announced outcome differs from the prepared state.
* pp      - the encoder measures her pair half in Z and announces; the
            preparer measures his stored half in Z; the pair must
            anticorrelate.
* mcasBB84- control rounds are the diagonal-basis rounds; failure is a
            measured outcome differing from the preparation.

Message-mode disturbance is estimated on a randomly disclosed 10% sample
of the sifted key, which is then discarded from the key.  Everything is
deterministic given the session seed.
"""

import csv
import io
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .adversary import AttackKind, AttackSpec, EveState, intervene_backward, intervene_forward
from .channel import ChannelSpec, legs_for, transmit, transmit_bell
from .kinds import ProtocolKind
from .qstate import (
    Basis,
    BellLabel,
    CanonState,
    Encoding,
    apply_encoding,
    bell_measure,
    canon_for,
    measure,
    pp_encode,
    prepare,
)

DISCLOSE_FRACTION = 0.1
BB84_ABORT_THRESHOLD = 0.11
DEFAULT_D_PD_CM = 0.05

_Z95 = 1.96
_BASES = (Basis.Z, Basis.X)
_CANON = (CanonState.ZERO, CanonState.ONE, CanonState.PLUS, CanonState.MINUS)

_COMPATIBLE_ATTACKS = {
    AttackKind.NO_ATTACK: frozenset(ProtocolKind),
    AttackKind.INTERCEPT_RESEND: frozenset(
        {ProtocolKind.BB84, ProtocolKind.MCAS_BB84, ProtocolKind.LM05}),
    AttackKind.MITM_PING_PONG: frozenset({ProtocolKind.PING_PONG}),
    AttackKind.MITM_LM05: frozenset({ProtocolKind.LM05}),
    AttackKind.MITM_MCAS_X: frozenset({ProtocolKind.MCAS_BB84}),
    AttackKind.ANCILLA_UBE: frozenset(
        {ProtocolKind.BB84, ProtocolKind.MCAS_BB84, ProtocolKind.LM05}),
}


class RoundMode(Enum):
    MESSAGE = "MM"
    CONTROL = "CM"


class Announcement(NamedTuple):
    """A publicly announced control-mode measurement."""

    basis: Basis
    bit: int


@dataclass(frozen=True)
class SessionConfig:
    """Everything one session depends on; identical configs replay identically.

    ``cm_fraction`` is the per-round probability of a control round; BB84
    has no control mode and ignores it.  ``enforce_cm_threshold`` opts
    the two-way protocols into the predetermined abort threshold that the
    asymmetric variant always applies.
    """

    protocol: ProtocolKind
    n_rounds: int
    seed: int
    cm_fraction: float = 0.2
    channel: ChannelSpec = ChannelSpec()
    attack: AttackSpec = AttackSpec()
    d_pd_cm: float = DEFAULT_D_PD_CM
    enforce_cm_threshold: bool = False

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError(f"n_rounds must be positive, got {self.n_rounds!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit integer, got {self.seed!r}")
        if not 0.0 <= self.cm_fraction < 1.0:
            raise ValueError(f"cm_fraction out of [0, 1): {self.cm_fraction!r}")
        if not 0.0 < self.d_pd_cm < 0.5:
            raise ValueError(f"d_pd_cm out of (0, 0.5): {self.d_pd_cm!r}")
        if self.protocol not in _COMPATIBLE_ATTACKS[self.attack.kind]:
            raise ValueError(
                f"attack {self.attack.kind.value} does not apply to {self.protocol.value}")
        legs = self.resolved_legs
        if self.protocol.is_two_way and legs % 2 != 0:
            raise ValueError(
                f"two-way protocols need an even leg count, got {legs}")

    @property
    def resolved_legs(self) -> int:
        return self.channel.legs if self.channel.legs is not None else legs_for(self.protocol)


@dataclass(slots=True)
class RoundRecord:
    """One protocol round.

    ``action`` is the applied Encoding on message rounds of two-way
    protocols, the Announcement on control rounds, and None for one-way
    rounds (the preparation itself carries the intent).  ``bob_result``
    is the raw measured bit or Bell label; None together with ``lost``
    means the round produced no detection.  ``eve_touched`` is ground
    truth for test oracles only; protocol logic never reads it.
    """

    index: int
    mode: RoundMode
    prep: CanonState | BellLabel
    action: Encoding | Announcement | None
    bob_basis: Basis | None
    bob_result: int | BellLabel | None
    lost: bool
    eve_touched: bool
    disclosed: bool = False


@dataclass(frozen=True)
class DisturbanceEstimate:
    """Empirical flip rates with sample counts.

    ``d_mm`` is None when no message bits were disclosed, ``d_cm`` when
    no valid control rounds exist (flagged undefined).  The half-width
    is the 95% binomial interval of the control-mode estimate.
    """

    d_mm: float | None
    d_cm: float | None
    n_mm: int
    n_cm: int
    half_width_95: float


@dataclass(frozen=True)
class Transcript:
    """Full session log: config echo, rounds, sifted keys and verdict.

    ``eve_key`` is aligned with the sifted keys; '?' marks key bits from
    rounds Eve did not engage on.
    """

    config: SessionConfig
    rounds: list[RoundRecord]
    alice_key: str
    bob_key: str
    eve_key: str
    disturbance: DisturbanceEstimate
    aborted: bool
    abort_reason: str | None


def binomial_half_width_95(p_hat: float, n: int) -> float:
    """95% normal-approximation half-width of a binomial proportion."""
    if n <= 0:
        return 0.0
    return _Z95 * math.sqrt(p_hat * (1.0 - p_hat) / n)


def alice_intent_bit(protocol: ProtocolKind, rec: RoundRecord) -> int:
    """The key bit Alice committed to in a message round."""
    if protocol.is_two_way:
        return rec.action.bit
    return rec.prep.bit


def bob_decoded_bit(protocol: ProtocolKind, rec: RoundRecord) -> int:
    """The key bit Bob decodes from his raw result in a message round."""
    if protocol is ProtocolKind.PING_PONG:
        return 0 if rec.bob_result is BellLabel.PSI_MINUS else 1
    if protocol is ProtocolKind.LM05:
        return rec.bob_result ^ rec.prep.bit
    return rec.bob_result


def _sift_keep(protocol: ProtocolKind, rec: RoundRecord) -> bool:
    if rec.lost or rec.mode is not RoundMode.MESSAGE:
        return False
    if protocol is ProtocolKind.BB84:
        return rec.bob_basis is rec.prep.basis
    if protocol is ProtocolKind.MCAS_BB84:
        return rec.bob_basis is Basis.Z
    return True


def _key_rounds(protocol: ProtocolKind, rounds) -> list[RoundRecord]:
    return [r for r in rounds if _sift_keep(protocol, r) and not r.disclosed]


def sift(protocol: ProtocolKind, rounds) -> tuple[str, str]:
    """Distill the key pair from a round list.

    BB84 keeps basis-matched message rounds, the asymmetric variant
    keeps computational-basis ones, and the two-way protocols keep every
    non-lost message round (no basis reconciliation).  Disclosed rounds
    are excluded.
    """
    alice = []
    bob = []
    for rec in _key_rounds(protocol, rounds):
        alice.append(str(alice_intent_bit(protocol, rec)))
        bob.append(str(bob_decoded_bit(protocol, rec)))
    return "".join(alice), "".join(bob)


def _cm_check(protocol: ProtocolKind, rec: RoundRecord) -> tuple[bool, bool]:
    """(valid, failed) for a control-mode record."""
    if rec.lost or rec.mode is not RoundMode.CONTROL:
        return False, False
    if protocol is ProtocolKind.LM05:
        if rec.action.basis is not rec.prep.basis:
            return False, False
        return True, rec.action.bit != rec.prep.bit
    if protocol is ProtocolKind.PING_PONG:
        return True, rec.bob_result == rec.action.bit
    if protocol is ProtocolKind.MCAS_BB84:
        if rec.bob_basis is not Basis.X:
            return False, False
        return True, rec.bob_result != rec.prep.bit
    return False, False


def estimate_disturbance(protocol: ProtocolKind, rounds) -> DisturbanceEstimate:
    """Flip rates from the disclosed message sample and the control checks."""
    n_mm = 0
    mm_fail = 0
    for rec in rounds:
        if rec.disclosed and not rec.lost:
            n_mm += 1
            if bob_decoded_bit(protocol, rec) != alice_intent_bit(protocol, rec):
                mm_fail += 1
    n_cm = 0
    cm_fail = 0
    for rec in rounds:
        valid, failed = _cm_check(protocol, rec)
        if valid:
            n_cm += 1
            if failed:
                cm_fail += 1
    d_mm = mm_fail / n_mm if n_mm else None
    d_cm = cm_fail / n_cm if n_cm else None
    half_width = binomial_half_width_95(d_cm, n_cm) if d_cm is not None else 0.0
    return DisturbanceEstimate(d_mm, d_cm, n_mm, n_cm, half_width)


def _abort_reason(est: DisturbanceEstimate, cfg: SessionConfig) -> str | None:
    if cfg.protocol is ProtocolKind.BB84:
        if est.d_mm is None:
            return "no-control-sample"
        if est.d_mm > BB84_ABORT_THRESHOLD:
            return "mm-disturbance-exceeded"
        return None
    threshold_active = cfg.protocol is ProtocolKind.MCAS_BB84 or cfg.enforce_cm_threshold
    if threshold_active:
        if est.d_cm is None:
            return "no-control-sample"
        if est.d_cm > cfg.d_pd_cm:
            return "cm-threshold-exceeded"
    return None


def abort_decision(est: DisturbanceEstimate, cfg: SessionConfig) -> bool:
    """Whether the session must be aborted.

    BB84 aborts above the hard-coded 0.11 message disturbance.  The
    asymmetric variant always enforces its predetermined control-mode
    threshold; the two-way protocols do so only when the optional
    threshold extension is enabled (they have no inherent abort point).
    """
    return _abort_reason(est, cfg) is not None


def _run_one_way_round(cfg, idx, rng, eve, fwd_legs) -> RoundRecord:
    if cfg.protocol is ProtocolKind.BB84:
        mode = RoundMode.MESSAGE
        basis = _BASES[rng.randrange(2)]
    else:
        mode = RoundMode.CONTROL if rng.random() < cfg.cm_fraction else RoundMode.MESSAGE
        basis = Basis.X if mode is RoundMode.CONTROL else Basis.Z
    prep = canon_for(basis, rng.randrange(2))
    eve.begin_round(idx, cfg.attack, rng)
    carrier = prepare(prep)
    carrier_basis = basis
    carrier = intervene_forward(cfg.attack, eve, carrier, rng)
    if eve.engaged and eve.emitted_basis is not None:
        carrier_basis = eve.emitted_basis
    for _ in range(fwd_legs):
        carrier = transmit(carrier, carrier_basis, cfg.channel, rng)
        if carrier is None:
            break
    if carrier is None:
        eve.commit_round(mode is RoundMode.MESSAGE)
        return RoundRecord(idx, mode, prep, None, None, None, True, eve.engaged)
    bob_basis = _BASES[rng.randrange(2)]
    outcome, _ = measure(carrier, bob_basis, rng)
    eve.commit_round(mode is RoundMode.MESSAGE)
    return RoundRecord(idx, mode, prep, None, bob_basis, outcome, False, eve.engaged)


def _run_lm05_round(cfg, idx, rng, eve, fwd_legs, bwd_legs) -> RoundRecord:
    prep = _CANON[rng.randrange(4)]
    mode = RoundMode.CONTROL if rng.random() < cfg.cm_fraction else RoundMode.MESSAGE
    eve.begin_round(idx, cfg.attack, rng)
    carrier = prepare(prep)
    carrier_basis = prep.basis
    carrier = intervene_forward(cfg.attack, eve, carrier, rng)
    if eve.engaged and eve.emitted_basis is not None:
        carrier_basis = eve.emitted_basis
    for _ in range(fwd_legs):
        carrier = transmit(carrier, carrier_basis, cfg.channel, rng)
        if carrier is None:
            break
    if carrier is None:
        eve.commit_round(mode is RoundMode.MESSAGE)
        return RoundRecord(idx, mode, prep, None, None, None, True, eve.engaged)
    if mode is RoundMode.MESSAGE:
        encoding = Encoding.from_bit(rng.randrange(2))
        carrier = apply_encoding(carrier, encoding)
        action: Encoding | Announcement = encoding
    else:
        cm_basis = _BASES[rng.randrange(2)]
        cm_bit, _ = measure(carrier, cm_basis, rng)
        action = Announcement(cm_basis, cm_bit)
        carrier = prepare(canon_for(cm_basis, cm_bit))
        carrier_basis = cm_basis
    for _ in range(bwd_legs):
        carrier = transmit(carrier, carrier_basis, cfg.channel, rng)
        if carrier is None:
            break
    if carrier is None:
        eve.commit_round(mode is RoundMode.MESSAGE)
        return RoundRecord(idx, mode, prep, action, None, None, True, eve.engaged)
    carrier = intervene_backward(cfg.attack, eve, carrier, rng)
    outcome, _ = measure(carrier, prep.basis, rng)
    eve.commit_round(mode is RoundMode.MESSAGE)
    return RoundRecord(idx, mode, prep, action, None, outcome, False, eve.engaged)


def _run_pp_round(cfg, idx, rng, eve, fwd_legs, bwd_legs) -> RoundRecord:
    prep = BellLabel.PSI_MINUS
    mode = RoundMode.CONTROL if rng.random() < cfg.cm_fraction else RoundMode.MESSAGE
    eve.begin_round(idx, cfg.attack, rng)
    flying = intervene_forward(cfg.attack, eve, prep, rng)
    for _ in range(fwd_legs):
        flying = transmit_bell(flying, cfg.channel, rng)
        if flying is None:
            break
    if flying is None:
        eve.commit_round(mode is RoundMode.MESSAGE)
        return RoundRecord(idx, mode, prep, None, None, None, True, eve.engaged)
    if mode is RoundMode.MESSAGE:
        encoding = Encoding.from_bit(rng.randrange(2))
        flying = pp_encode(flying, encoding)
        for _ in range(bwd_legs):
            flying = transmit_bell(flying, cfg.channel, rng)
            if flying is None:
                break
        if flying is None:
            eve.commit_round(True)
            return RoundRecord(idx, mode, prep, encoding, None, None, True, eve.engaged)
        flying = intervene_backward(cfg.attack, eve, flying, rng)
        result: int | BellLabel = bell_measure(flying)
        eve.commit_round(True)
        return RoundRecord(idx, mode, prep, encoding, None, result, False, eve.engaged)
    # Control mode: the encoder measures her received photon in Z and
    # announces; the preparer measures his stored pair half in Z.  A
    # genuine pair anticorrelates (either label); with a decoy in the
    # line the two halves belong to different pairs and are independent.
    alice_bit = rng.randrange(2)
    bob_bit = rng.randrange(2) if eve.engaged else 1 - alice_bit
    eve.commit_round(False)
    return RoundRecord(idx, mode, prep, Announcement(Basis.Z, alice_bit), None,
                       bob_bit, False, eve.engaged)


def run_session(cfg: SessionConfig) -> Transcript:
    """Execute a full session and return its transcript.

    Deterministic given the seed: replaying a config reproduces the
    transcript bit for bit.
    """
    rng = random.Random(cfg.seed)
    eve = EveState(cfg.attack)
    legs = cfg.resolved_legs
    records: list[RoundRecord] = []
    if cfg.protocol.is_two_way:
        fwd_legs = legs // 2
        bwd_legs = legs - fwd_legs
        if cfg.protocol is ProtocolKind.LM05:
            for idx in range(cfg.n_rounds):
                records.append(_run_lm05_round(cfg, idx, rng, eve, fwd_legs, bwd_legs))
        else:
            for idx in range(cfg.n_rounds):
                records.append(_run_pp_round(cfg, idx, rng, eve, fwd_legs, bwd_legs))
    else:
        for idx in range(cfg.n_rounds):
            records.append(_run_one_way_round(cfg, idx, rng, eve, legs))

    if all(r.lost for r in records):
        est = DisturbanceEstimate(None, None, 0, 0, 0.0)
        return Transcript(cfg, records, "", "", "", est, True, "no-yield")

    # Disclose a sample of the sifted bits for the message-mode estimate;
    # disclosed rounds are dropped from the key.
    for rec in records:
        if _sift_keep(cfg.protocol, rec):
            rec.disclosed = rng.random() < DISCLOSE_FRACTION

    alice_key, bob_key = sift(cfg.protocol, records)
    eve_key = "".join(
        str(eve.copied_bits[r.index]) if r.index in eve.copied_bits else "?"
        for r in _key_rounds(cfg.protocol, records))
    est = estimate_disturbance(cfg.protocol, records)
    reason = _abort_reason(est, cfg)
    return Transcript(cfg, records, alice_key, bob_key, eve_key, est,
                      reason is not None, reason)


def _serialize_action(action) -> str:
    if action is None:
        return ""
    if isinstance(action, Encoding):
        return action.value
    return f"{action.basis.value}:{action.bit}"


def _serialize_result(result) -> str:
    if result is None:
        return ""
    if isinstance(result, BellLabel):
        return result.value
    return str(result)


def write_transcript_csv(transcript: Transcript, fileobj) -> None:
    """One round per line: index, mode, prep, action, result, lost, eve_touched."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["index", "mode", "prep", "action", "result", "lost", "eve_touched"])
    for rec in transcript.rounds:
        writer.writerow([
            rec.index,
            rec.mode.value,
            rec.prep.value,
            _serialize_action(rec.action),
            _serialize_result(rec.bob_result),
            "true" if rec.lost else "false",
            "true" if rec.eve_touched else "false",
        ])


def transcript_csv(transcript: Transcript) -> str:
    """The round log as a CSV string (LF line endings)."""
    buf = io.StringIO()
    write_transcript_csv(transcript, buf)
    return buf.getvalue()
