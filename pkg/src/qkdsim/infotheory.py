"""Closed-form information quantities and the curve builders.

All entropies are base 2, with the endpoint values defined by continuity.
The bundled curve presets are:

* ``fig2a``  - one-way BB84: I_AB(D) = 1 - h(D) against I_AE(D) = h(D)
               over the message-mode disturbance D.
* ``fig2b``  - two-way protocols under a copy-in-the-middle attack:
               I_AB is constant 1 and Eve's copied-key fraction grows
               linearly with the control-mode disturbance, I_AE = 2 D_CM.
* ``fig2c``  - the one-way message/control asymmetric variant: same
               linear model, truncated at the predetermined control-mode
               threshold.

The linear ``fig2b`` shape is the copied-fraction model forced by the
attack mechanics (presence p yields D_CM = p/2 and coverage p); it is
cross-checked against Monte-Carlo coverage rather than against any
assumed asymptotic form.  The related six-state threshold (about 0.126)
is noted here for reference only and is not computed.
"""

import math
from dataclasses import dataclass

CURVE_LABELS = ("fig2a", "fig2b", "fig2c")

DEFAULT_GRID_POINTS = 201
DEFAULT_D_PD_CM = 0.05


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x), with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"argument out of [0, 1]: {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))


def _check_disturbance(d: float) -> None:
    if not 0.0 <= d <= 0.5:
        raise ValueError(f"disturbance out of [0, 0.5]: {d!r}")


def mutual_info_ab(d: float) -> float:
    """Sender-receiver mutual information 1 - h(d)."""
    _check_disturbance(d)
    return 1.0 - binary_entropy(d)


def mutual_info_ae(d: float) -> float:
    """Sender-eavesdropper mutual information h(d)."""
    _check_disturbance(d)
    return binary_entropy(d)


def critical_disturbance(tol: float = 1e-6) -> float:
    """Bisection root of I_AB(d) - I_AE(d) on [0.05, 0.2].

    Equivalently the d with h(d) = 1/2, about 0.11.  The returned value
    satisfies |h(d) - 1/2| < tol.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    lo, hi = 0.05, 0.2
    # |d/dd (1 - 2 h)| < 9 on the bracket, so an interval below tol/16
    # pins the function value well inside tol.
    target = tol / 16.0
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if 1.0 - 2.0 * binary_entropy(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def key_rate_rpa(xi: float) -> float:
    """Asymptotic secure key rate 1 - h(xi) of the ancilla-attack bound."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi out of [0, 1]: {xi!r}")
    return 1.0 - binary_entropy(xi)


def eve_info_mitm(d_cm: float) -> float:
    """Eve's copied-key fraction under the copy attack, 2 * D_CM capped at 1.

    Control-mode disturbance D_CM = p/2 at presence p, and Eve holds
    exactly the engaged fraction p of the key.
    """
    _check_disturbance(d_cm)
    return min(1.0, 2.0 * d_cm)


@dataclass(frozen=True)
class MutualInfoCurve:
    """Sampled I_AB / I_AE curves over a disturbance grid."""

    d_grid: tuple[float, ...]
    i_ab: tuple[float, ...]
    i_ae: tuple[float, ...]
    label: str

    def __post_init__(self):
        if not (len(self.d_grid) == len(self.i_ab) == len(self.i_ae)):
            raise ValueError("grid and value lists must have equal length")
        for values in (self.i_ab, self.i_ae):
            for v in values:
                if not -1e-12 <= v <= 1.0 + 1e-12:
                    raise ValueError(f"mutual information out of [0, 1]: {v!r}")


def _linspace(lo: float, hi: float, n: int) -> tuple[float, ...]:
    step = (hi - lo) / (n - 1)
    return tuple(lo + i * step for i in range(n - 1)) + (hi,)


def build_curve(label: str, n_points: int = DEFAULT_GRID_POINTS,
                d_pd_cm: float = DEFAULT_D_PD_CM) -> MutualInfoCurve:
    """Sample one of the bundled curve presets (see module docstring)."""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points!r}")
    if label == "fig2a":
        grid = _linspace(0.0, 0.5, n_points)
        return MutualInfoCurve(
            grid,
            tuple(mutual_info_ab(d) for d in grid),
            tuple(mutual_info_ae(d) for d in grid),
            label,
        )
    if label == "fig2b":
        grid = _linspace(0.0, 0.5, n_points)
        return MutualInfoCurve(
            grid,
            tuple(1.0 for _ in grid),
            tuple(eve_info_mitm(d) for d in grid),
            label,
        )
    if label == "fig2c":
        if not 0.0 < d_pd_cm < 0.5:
            raise ValueError(f"d_pd_cm out of (0, 0.5): {d_pd_cm!r}")
        grid = _linspace(0.0, d_pd_cm, n_points)
        return MutualInfoCurve(
            grid,
            tuple(1.0 for _ in grid),
            tuple(eve_info_mitm(d) for d in grid),
            label,
        )
    raise ValueError(f"unknown curve label: {label!r}")
