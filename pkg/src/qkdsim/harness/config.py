"""Line-oriented scenario config files.

Format: `key = value` assignments grouped under `[section]` headers,
with `#` comments and blank lines ignored.  Unknown sections or keys are
rejected with the offending line number, as are out-of-range values.
A seed is mandatory; scenarios never fall back to wall-clock seeding.
"""

from dataclasses import dataclass

from ..adversary import AttackKind, AttackSpec, BasisPolicy
from ..channel import ChannelSpec, LinkBudget
from ..kinds import ProtocolKind
from ..protocol import DEFAULT_D_PD_CM, SessionConfig
from .scenario import (
    DEFAULT_SWEEP_ROUNDS,
    SCENARIO_NAMES,
    Scenario,
    SweepParams,
    parse_p_grid,
)


class ConfigError(ValueError):
    """A config file problem, with a line number when one applies."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCHEMA = {
    "scenario": {
        "name": str,
        "seed": int,
        "out_dir": str,
        "n_points": int,
        "d_pd_cm": float,
    },
    "session": {
        "protocol": ProtocolKind.from_string,
        "n_rounds": int,
        "cm_fraction": float,
        "enforce_cm_threshold": _parse_bool,
    },
    "channel": {
        "transmittance_per_leg": float,
        "flip_prob": float,
        "legs": int,
        "alpha_db_per_km": float,
        "distance_km": float,
    },
    "attack": {
        "kind": AttackKind.from_string,
        "presence": float,
        "basis_policy": BasisPolicy.from_string,
        "f0": float,
        "f_plus": float,
    },
    "sweep": {
        "p_grid": str,
        "n_rounds": int,
    },
}


@dataclass
class _Entry:
    value: object
    lineno: int


def _read_entries(path: str) -> dict:
    entries: dict[tuple[str, str], _Entry] = {}
    section = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip().lower()
                if section not in _SCHEMA:
                    raise ConfigError(f"unknown section [{section}]", lineno)
                continue
            if "=" not in line:
                raise ConfigError(f"expected `key = value`, got {line!r}", lineno)
            if section is None:
                raise ConfigError("assignment before any [section] header", lineno)
            key, _, raw_value = line.partition("=")
            key = key.strip().lower()
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]", lineno)
            if (section, key) in entries:
                raise ConfigError(f"duplicate key {key!r} in section [{section}]", lineno)
            caster = _SCHEMA[section][key]
            try:
                value = caster(raw_value.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
            entries[(section, key)] = _Entry(value, lineno)
    return entries


class _View:
    """Typed access with line-number-carrying range checks."""

    def __init__(self, entries):
        self._entries = entries

    def get(self, section, key, default=None):
        entry = self._entries.get((section, key))
        return default if entry is None else entry.value

    def lineno(self, section, key):
        entry = self._entries.get((section, key))
        return None if entry is None else entry.lineno

    def require(self, section, key):
        entry = self._entries.get((section, key))
        if entry is None:
            raise ConfigError(f"missing required key {key!r} in section [{section}]")
        return entry.value

    def check_range(self, section, key, ok, message):
        entry = self._entries.get((section, key))
        if entry is not None and not ok(entry.value):
            raise ConfigError(f"{key} {message}, got {entry.value!r}", entry.lineno)


def parse_config(path: str) -> Scenario:
    """Parse a scenario config file into a Scenario."""
    view = _View(_read_entries(path))

    name = view.require("scenario", "name")
    if name not in SCENARIO_NAMES:
        raise ConfigError(
            f"unknown scenario name {name!r} (one of {', '.join(SCENARIO_NAMES)})",
            view.lineno("scenario", "name"))
    seed = view.require("scenario", "seed")
    view.check_range("scenario", "seed", lambda v: 0 <= v < 2 ** 64,
                     "must be a 64-bit integer")
    view.check_range("scenario", "n_points", lambda v: v >= 2, "must be >= 2")
    view.check_range("scenario", "d_pd_cm", lambda v: 0.0 < v < 0.5,
                     "out of range (0, 0.5)")
    view.check_range("session", "n_rounds", lambda v: v >= 1, "must be >= 1")
    view.check_range("session", "cm_fraction", lambda v: 0.0 <= v < 1.0,
                     "out of range [0, 1)")
    view.check_range("channel", "transmittance_per_leg",
                     lambda v: 0.0 <= v <= 1.0, "out of range [0, 1]")
    view.check_range("channel", "flip_prob", lambda v: 0.0 <= v <= 0.5,
                     "out of range [0, 0.5]")
    view.check_range("channel", "legs", lambda v: v >= 1, "must be >= 1")
    view.check_range("channel", "alpha_db_per_km", lambda v: v >= 0.0, "must be >= 0")
    view.check_range("channel", "distance_km", lambda v: v >= 0.0, "must be >= 0")
    view.check_range("attack", "presence", lambda v: 0.0 <= v <= 1.0,
                     "out of range [0, 1]")
    view.check_range("attack", "f0", lambda v: 0.5 <= v <= 1.0, "out of range [0.5, 1]")
    view.check_range("attack", "f_plus", lambda v: 0.5 <= v <= 1.0,
                     "out of range [0.5, 1]")
    view.check_range("sweep", "n_rounds", lambda v: v >= 1, "must be >= 1")

    out_dir = view.get("scenario", "out_dir", "out")
    n_points = view.get("scenario", "n_points", 201)
    d_pd_cm = view.get("scenario", "d_pd_cm", DEFAULT_D_PD_CM)
    link = LinkBudget(view.get("channel", "alpha_db_per_km", 0.2),
                      view.get("channel", "distance_km", 50.0))

    def build_channel():
        return ChannelSpec(
            view.get("channel", "transmittance_per_leg", 1.0),
            view.get("channel", "flip_prob", 0.0),
            view.get("channel", "legs"),
        )

    def build_attack():
        return AttackSpec(
            view.get("attack", "kind", AttackKind.NO_ATTACK),
            view.get("attack", "presence", 0.0),
            view.get("attack", "basis_policy", BasisPolicy.RANDOM),
            view.get("attack", "f0", 1.0),
            view.get("attack", "f_plus", 1.0),
        )

    try:
        if name == "session":
            protocol = view.require("session", "protocol")
            session = SessionConfig(
                protocol=protocol,
                n_rounds=view.get("session", "n_rounds", DEFAULT_SWEEP_ROUNDS),
                seed=seed,
                cm_fraction=view.get("session", "cm_fraction", 0.2),
                channel=build_channel(),
                attack=build_attack(),
                d_pd_cm=d_pd_cm,
                enforce_cm_threshold=view.get("session", "enforce_cm_threshold", False),
            )
            return Scenario(name, seed, out_dir, session=session)
        if name == "sweep":
            protocol = view.require("session", "protocol")
            attack = build_attack()
            sweep = SweepParams(
                protocol=protocol,
                attack_kind=attack.kind,
                basis_policy=attack.basis_policy,
                f0=attack.f0,
                f_plus=attack.f_plus,
                p_values=parse_p_grid(view.require("sweep", "p_grid")),
                n_rounds=view.get("sweep", "n_rounds", DEFAULT_SWEEP_ROUNDS),
                cm_fraction=view.get("session", "cm_fraction", 0.2),
                channel=build_channel(),
                d_pd_cm=d_pd_cm,
                enforce_cm_threshold=view.get("session", "enforce_cm_threshold", False),
            )
            return Scenario(name, seed, out_dir, sweep=sweep)
        if name == "table1":
            return Scenario(name, seed, out_dir, link=link, d_pd_cm=d_pd_cm,
                            n_rounds=view.get("session", "n_rounds", DEFAULT_SWEEP_ROUNDS))
        # Curve scenarios.
        return Scenario(name, seed, out_dir, n_points=n_points, d_pd_cm=d_pd_cm)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
