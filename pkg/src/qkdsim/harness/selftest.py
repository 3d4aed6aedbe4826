"""The acceptance suite: one executable check per shipped guarantee.

Each check returns a result instead of asserting, so the same registry
backs both the `qkdsim selftest` CLI command and the pytest acceptance
module.  Heavy Monte-Carlo sessions are cached and shared between
checks.  Statistical assertions use fixed seeds and 4-sigma binomial
bounds unless a check states a tighter deterministic bound.
"""

import filecmp
import math
import random
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from ..adversary import AttackKind, AttackSpec, BasisPolicy, eve_accuracy, xi_from_fidelities
from ..channel import ChannelSpec, LinkBudget, leg_transmittance, legs_for, path_transmittance
from ..infotheory import binary_entropy, build_curve, critical_disturbance, key_rate_rpa
from ..kinds import ProtocolKind
from ..postproc import choose_output_length, privacy_amplify, random_hash_spec, universal_hash
from ..protocol import RoundMode, SessionConfig, alice_intent_bit, bob_decoded_bit, run_session
from .scenario import Scenario, SweepParams, run_scenario

_SEED = 987654321

_MITM_ATTACK = {
    ProtocolKind.PING_PONG: AttackKind.MITM_PING_PONG,
    ProtocolKind.LM05: AttackKind.MITM_LM05,
}


@dataclass
class CheckResult:
    passed: bool
    detail: str


@dataclass(frozen=True)
class Check:
    number: int
    slug: str
    description: str
    fn: Callable[[], CheckResult]

    def run(self) -> CheckResult:
        return self.fn()


_session_cache: dict = {}


def _mitm_session(protocol: ProtocolKind, presence: float,
                  n_rounds: int = 20000) -> tuple:
    """A cached noiseless MITM session plus its wall-clock runtime."""
    key = (protocol, presence, n_rounds)
    if key not in _session_cache:
        cfg = SessionConfig(
            protocol=protocol,
            n_rounds=n_rounds,
            seed=_SEED + int(presence * 100),
            cm_fraction=0.2,
            channel=ChannelSpec.for_protocol(protocol),
            attack=AttackSpec(_MITM_ATTACK[protocol], presence),
        )
        start = time.perf_counter()
        transcript = run_session(cfg)
        _session_cache[key] = (transcript, time.perf_counter() - start)
    return _session_cache[key]


def _mcas_session(presence: float) -> tuple:
    key = ("mcas", presence)
    if key not in _session_cache:
        cfg = SessionConfig(
            protocol=ProtocolKind.MCAS_BB84,
            n_rounds=20000,
            seed=_SEED + 7,
            cm_fraction=0.2,
            channel=ChannelSpec.for_protocol(ProtocolKind.MCAS_BB84),
            attack=AttackSpec(AttackKind.MITM_MCAS_X, presence),
        )
        start = time.perf_counter()
        transcript = run_session(cfg)
        _session_cache[key] = (transcript, time.perf_counter() - start)
    return _session_cache[key]


def _bb84_ir_session() -> tuple:
    key = "bb84-ir"
    if key not in _session_cache:
        cfg = SessionConfig(
            protocol=ProtocolKind.BB84,
            n_rounds=200000,
            seed=_SEED + 11,
            cm_fraction=0.0,
            channel=ChannelSpec.for_protocol(ProtocolKind.BB84),
            attack=AttackSpec(AttackKind.INTERCEPT_RESEND, 1.0, BasisPolicy.RANDOM),
        )
        start = time.perf_counter()
        transcript = run_session(cfg)
        _session_cache[key] = (transcript, time.perf_counter() - start)
    return _session_cache[key]


def _expected_ir_disturbance() -> Fraction:
    """Sifted error rate of random-basis intercept-resend, by enumeration.

    Exhausts preparation state x attack basis x attack outcome x final
    outcome in exact rational arithmetic; no simulation involved.  The
    overlap of any eigenstate with a same-basis eigenstate is 0 or 1 and
    with a cross-basis one is 1/2.
    """
    half = Fraction(1, 2)

    def born(prep_basis, prep_bit, meas_basis, meas_bit) -> Fraction:
        if prep_basis == meas_basis:
            return Fraction(1) if prep_bit == meas_bit else Fraction(0)
        return half

    err = Fraction(0)
    total = Fraction(0)
    for a_basis in ("Z", "X"):
        for a_bit in (0, 1):
            for e_basis in ("Z", "X"):
                for e_bit in (0, 1):
                    p_e = born(a_basis, a_bit, e_basis, e_bit)
                    for b_bit in (0, 1):
                        p_b = born(e_basis, e_bit, a_basis, b_bit)
                        w = Fraction(1, 4) * half * p_e * p_b
                        total += w
                        if b_bit != a_bit:
                            err += w
    return err / total


def _four_sigma(p: float, n: int) -> float:
    return 4.0 * math.sqrt(p * (1.0 - p) / max(n, 1))


def _check_critical_disturbance() -> CheckResult:
    best = math.inf
    for _ in range(5):
        start = time.perf_counter()
        d_star = critical_disturbance(1e-6)
        best = min(best, time.perf_counter() - start)
    h_err = abs(binary_entropy(d_star) - 0.5)
    ok = abs(d_star - 0.11) <= 1e-3 and h_err <= 1e-6 and best < 1e-3
    return CheckResult(ok, f"D* = {d_star:.6f}, |h(D*)-1/2| = {h_err:.2e}, "
                           f"best runtime {best * 1e6:.0f} us")


def _check_mutual_info_identity() -> CheckResult:
    curve = build_curve("fig2a", 201)
    worst = max(abs(ab + ae - 1.0) for ab, ae in zip(curve.i_ab, curve.i_ae))
    cross = None
    for i in range(len(curve.d_grid) - 1):
        gap_here = curve.i_ab[i] - curve.i_ae[i]
        gap_next = curve.i_ab[i + 1] - curve.i_ae[i + 1]
        if gap_here > 0.0 >= gap_next:
            cross = curve.d_grid[i]
            break
    step = curve.d_grid[1] - curve.d_grid[0]
    d_star = critical_disturbance(1e-6)
    ok = worst <= 1e-12 and cross is not None and abs(cross - d_star) <= step
    return CheckResult(ok, f"max |I_AB+I_AE-1| = {worst:.2e}, crossing cell at "
                           f"{cross}, D* = {d_star:.6f}, grid step {step}")


def _check_mitm_mm_undetectable() -> CheckResult:
    details = []
    ok = True
    for protocol in (ProtocolKind.PING_PONG, ProtocolKind.LM05):
        for presence in (0.25, 0.5, 1.0):
            transcript, runtime = _mitm_session(protocol, presence)
            flips = sum(
                1 for rec in transcript.rounds
                if rec.mode is RoundMode.MESSAGE and not rec.lost
                and bob_decoded_bit(protocol, rec) != alice_intent_bit(protocol, rec))
            est = transcript.disturbance
            this_ok = flips == 0 and est.d_mm == 0.0 and runtime < 30.0
            ok = ok and this_ok
            details.append(f"{protocol.value}@p={presence}: {flips} flipped MM bits, "
                           f"d_mm={est.d_mm}, {runtime:.1f}s")
    return CheckResult(ok, "; ".join(details))


def _check_cm_detection() -> CheckResult:
    details = []
    ok = True
    for protocol in (ProtocolKind.PING_PONG, ProtocolKind.LM05):
        for presence in (0.25, 0.5, 1.0):
            transcript, _ = _mitm_session(protocol, presence)
            est = transcript.disturbance
            expected = presence / 2.0
            bound = _four_sigma(expected, est.n_cm)
            this_ok = est.d_cm is not None and abs(est.d_cm - expected) <= bound
            if presence == 1.0:
                cm_rounds = sum(1 for r in transcript.rounds
                                if r.mode is RoundMode.CONTROL)
                this_ok = this_ok and cm_rounds >= 2000 and 0.47 <= est.d_cm <= 0.53
            ok = ok and this_ok
            details.append(f"{protocol.value}@p={presence}: d_cm={est.d_cm:.4f} "
                           f"(n={est.n_cm}, target {expected})")
    return CheckResult(ok, "; ".join(details))


def _check_eve_key_copy() -> CheckResult:
    details = []
    ok = True
    for protocol in (ProtocolKind.PING_PONG, ProtocolKind.LM05):
        t_full, _ = _mitm_session(protocol, 1.0)
        acc_full = eve_accuracy(t_full)
        full_ok = (acc_full.coverage == 1.0 and acc_full.accuracy == 1.0
                   and t_full.eve_key == t_full.alice_key)
        t_half, _ = _mitm_session(protocol, 0.5)
        acc_half = eve_accuracy(t_half)
        bound = _four_sigma(0.5, len(t_half.alice_key))
        half_ok = abs(acc_half.coverage - 0.5) <= bound and acc_half.accuracy == 1.0
        ok = ok and full_ok and half_ok
        details.append(f"{protocol.value}: p=1 copy exact={full_ok}, "
                       f"p=0.5 coverage={acc_half.coverage:.4f}")
    return CheckResult(ok, "; ".join(details))


def _check_key_rate_cases() -> CheckResult:
    cases = (((1.0, 1.0), 1.0), ((1.0, 0.5), 0.0), ((0.5, 1.0), 0.0))
    results = [key_rate_rpa(xi_from_fidelities(f0, fp)) for (f0, fp), _ in cases]
    ok = all(r == want for r, (_, want) in zip(results, cases))
    return CheckResult(ok, f"r_PA = {results} for fidelity pairs (1,1), (1,1/2), (1/2,1)")


def _check_intercept_resend_baseline() -> CheckResult:
    transcript, _ = _bb84_ir_session()
    est = transcript.disturbance
    expected = float(_expected_ir_disturbance())
    bound = _four_sigma(expected, est.n_mm)
    ok = (expected == 0.25 and est.n_mm >= 10000
          and est.d_mm is not None and abs(est.d_mm - expected) <= bound)
    return CheckResult(ok, f"enumerated rate {expected}, simulated d_mm={est.d_mm:.4f} "
                           f"over {est.n_mm} disclosed bits (4-sigma {bound:.4f})")


def _check_mcas_threshold() -> CheckResult:
    hot, _ = _mcas_session(0.5)
    cold, _ = _mcas_session(0.04)
    hot_est = hot.disturbance
    cold_est = cold.disturbance
    hot_ok = (hot.aborted and hot.abort_reason == "cm-threshold-exceeded"
              and hot_est.d_cm is not None and hot_est.d_cm > hot.config.d_pd_cm)
    cold_ok = (not cold.aborted and cold_est.d_cm is not None
               and cold_est.d_cm < cold.config.d_pd_cm and cold_est.d_mm == 0.0)
    return CheckResult(hot_ok and cold_ok,
                       f"p=0.5: d_cm={hot_est.d_cm:.4f} aborted={hot.aborted}; "
                       f"p=0.04: d_cm={cold_est.d_cm:.4f} aborted={cold.aborted}, "
                       f"d_mm={cold_est.d_mm}")


def _check_table1() -> CheckResult:
    link = LinkBudget(0.2, 50.0)
    with tempfile.TemporaryDirectory() as tmp:
        sc = Scenario("table1", seed=_SEED, out_dir=tmp, link=link, n_rounds=4000)
        result = run_scenario(sc)
        lines = Path(result.paths[0]).read_text(encoding="ascii").splitlines()
    header = lines[0].split(",")
    col_t = header.index("transmittance")
    col_d = header.index("photon_distance_km")
    col_p = header.index("protocol")
    t_leg = leg_transmittance(link)
    order = (ProtocolKind.BB84, ProtocolKind.PING_PONG, ProtocolKind.LM05,
             ProtocolKind.MCAS_BB84)
    ok = True
    seen = []
    for line, protocol in zip(lines[1:], order):
        cells = line.split(",")
        ok = ok and cells[col_p] == protocol.value
        ok = ok and float(cells[col_t]) == path_transmittance(t_leg, protocol)
        ok = ok and float(cells[col_d]) == legs_for(protocol) * link.distance_km
        seen.append(f"{cells[col_p]}: T={cells[col_t]}, L={cells[col_d]}")
    return CheckResult(ok, "; ".join(seen))


def _check_pa_futility() -> CheckResult:
    transcript, _ = _mitm_session(ProtocolKind.LM05, 1.0)
    copy_ok = transcript.eve_key == transcript.alice_key
    zero_k = choose_output_length(len(transcript.alice_key), 1.0, 32)
    secret_blocked, spec_blocked = privacy_amplify(
        transcript.alice_key, 1.0, 32, random.Random(_SEED))
    blocked_ok = zero_k == 0 and secret_blocked == "" and spec_blocked.output_len == 0
    # With any positive output length, hashing Eve's copy with the public
    # spec reproduces the secret key exactly.
    secret, spec = privacy_amplify(transcript.alice_key, 0.5, 32, random.Random(_SEED))
    eve_secret = universal_hash(transcript.eve_key, spec)
    leak_ok = spec.output_len > 0 and eve_secret == secret
    ok = copy_ok and blocked_ok and leak_ok
    return CheckResult(ok, f"copied key exact={copy_ok}, k(eve_info=1)={zero_k}, "
                           f"k={spec.output_len} and Eve's hash matches={leak_ok}")


def _check_hash_properties() -> CheckResult:
    rng = random.Random(_SEED)
    m, k = 64, 32
    spec = random_hash_spec(m, k, rng)
    x = f"{rng.getrandbits(m):0{m}b}"
    determinism = universal_hash(x, spec) == universal_hash(x, spec)

    linear = True
    for _ in range(10000):
        a = rng.getrandbits(m)
        b = rng.getrandbits(m)
        ha = int(universal_hash(f"{a:0{m}b}", spec), 2) if k else 0
        hb = int(universal_hash(f"{b:0{m}b}", spec), 2)
        hx = int(universal_hash(f"{a ^ b:0{m}b}", spec), 2)
        if hx != ha ^ hb:
            linear = False
            break

    collisions = 0
    for _ in range(100000):
        trial_spec = random_hash_spec(m, k, rng)
        a = rng.getrandbits(m)
        b = rng.getrandbits(m)
        while b == a:
            b = rng.getrandbits(m)
        if universal_hash(f"{a:0{m}b}", trial_spec) == universal_hash(f"{b:0{m}b}", trial_spec):
            collisions += 1
    ok = determinism and linear and collisions == 0
    return CheckResult(ok, f"deterministic={determinism}, linear on 10^4 triples={linear}, "
                           f"collisions={collisions}/10^5 at k=32")


def _check_determinism() -> CheckResult:
    session = SessionConfig(
        protocol=ProtocolKind.LM05,
        n_rounds=2000,
        seed=_SEED + 21,
        channel=ChannelSpec.for_protocol(ProtocolKind.LM05, 0.9, 0.01),
        attack=AttackSpec(AttackKind.MITM_LM05, 0.5),
    )
    identical = True
    compared = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, scenario in (
            ("fig2a", lambda d: Scenario("fig2a", seed=_SEED, out_dir=d)),
            ("session", lambda d: Scenario("session", seed=_SEED + 21, out_dir=d,
                                           session=session)),
            ("sweep", lambda d: Scenario(
                "sweep", seed=_SEED, out_dir=d,
                sweep=SweepParams(ProtocolKind.LM05, AttackKind.MITM_LM05,
                                  p_values=(0.0, 0.5, 1.0), n_rounds=2000))),
            ("table1", lambda d: Scenario("table1", seed=_SEED, out_dir=d,
                                          n_rounds=2000)),
        ):
            first = run_scenario(scenario(f"{tmp}/{name}-a"))
            second = run_scenario(scenario(f"{tmp}/{name}-b"))
            for p1, p2 in zip(first.paths, second.paths):
                same = filecmp.cmp(p1, p2, shallow=False)
                identical = identical and same
                compared.append(f"{name}/{p1.name}: {'identical' if same else 'DIFFERS'}")
    return CheckResult(identical, "; ".join(compared))


CHECKS: tuple[Check, ...] = (
    Check(1, "critical-disturbance",
          "bisection threshold lands on 0.11 with h(D*) = 1/2, under 1 ms",
          _check_critical_disturbance),
    Check(2, "mutual-info-identity",
          "I_AB + I_AE = 1 over the grid and the curves cross at the threshold",
          _check_mutual_info_identity),
    Check(3, "mitm-mm-undetectable",
          "copy attacks flip zero message bits at p in {0.25, 0.5, 1.0}",
          _check_mitm_mm_undetectable),
    Check(4, "cm-detection",
          "control-mode disturbance equals p/2 within 4 sigma",
          _check_cm_detection),
    Check(5, "eve-key-copy",
          "Eve's raw key matches Alice's on every engaged round",
          _check_eve_key_copy),
    Check(6, "key-rate-special-cases",
          "r_PA is exactly 1, 0, 0 for the three fidelity patterns",
          _check_key_rate_cases),
    Check(7, "intercept-resend-baseline",
          "random-basis intercept-resend shows the enumerated 0.25 error rate",
          _check_intercept_resend_baseline),
    Check(8, "mcas-threshold",
          "the predetermined control threshold aborts exactly when exceeded",
          _check_mcas_threshold),
    Check(9, "table1-accounting",
          "distance and transmittance columns follow the leg counts exactly",
          _check_table1),
    Check(10, "pa-futility",
          "with a full copy, hashing returns Eve the same secret key; full leakage yields k=0",
          _check_pa_futility),
    Check(11, "hash-properties",
          "hash family is deterministic, linear over XOR and collision-free at k=32",
          _check_hash_properties),
    Check(12, "determinism",
          "re-running any scenario with the same seed reproduces identical bytes",
          _check_determinism),
)


def run_selftest(stream=None) -> int:
    """Run every acceptance check; print one line per criterion.

    Returns 0 when all pass, 1 otherwise.
    """
    import sys
    out = stream if stream is not None else sys.stdout
    all_ok = True
    for check in CHECKS:
        try:
            result = check.run()
        except Exception as exc:  # a crashed check is a failed check
            result = CheckResult(False, f"raised {type(exc).__name__}: {exc}")
        all_ok = all_ok and result.passed
        status = "PASS" if result.passed else "FAIL"
        print(f"[{status}] criterion {check.number:2d} {check.slug}: {result.detail}",
              file=out)
    print("selftest: all criteria passed" if all_ok else "selftest: FAILURES present",
          file=out)
    return 0 if all_ok else 1
