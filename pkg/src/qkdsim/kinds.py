"""Protocol identifiers shared across the channel and protocol modules."""

from enum import Enum


class ProtocolKind(Enum):
    """The four simulated protocols."""

    BB84 = "bb84"
    PING_PONG = "pp"
    LM05 = "lm05"
    MCAS_BB84 = "mcasbb84"

    @property
    def is_two_way(self) -> bool:
        return self in (ProtocolKind.PING_PONG, ProtocolKind.LM05)

    @classmethod
    def from_string(cls, text: str) -> "ProtocolKind":
        aliases = {
            "bb84": cls.BB84,
            "pp": cls.PING_PONG,
            "pingpong": cls.PING_PONG,
            "ping_pong": cls.PING_PONG,
            "lm05": cls.LM05,
            "mcasbb84": cls.MCAS_BB84,
            "mcas_bb84": cls.MCAS_BB84,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown protocol kind: {text!r}") from None
