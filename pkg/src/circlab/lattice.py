"""Scattering analysis of the four-port symmetric-lattice transfer switch.

The switch is a bridge of two tunable inductor pairs (through arms between
ports 1-2 / 3-4, crossed arms between 1-4 / 3-2) with a shunt matching
capacitor at every port node.  Admittance is assembled from the fixed
incidence matrix of that topology; scattering follows from
S = (I + Z0 Y)^-1 (I - Z0 Y).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class SwitchState(enum.Enum):
    THROUGH = "through"
    CROSSED = "crossed"


class DcSingularityError(ValueError):
    """Inductive network evaluated at omega = 0."""


class SingularNetworkError(RuntimeError):
    """(I + Z0 Y) is numerically singular at the requested frequency."""


class MatchConditionError(ValueError):
    """First-order expansion requested off the matched design point."""


# condition-number guard for the scattering inversion
COND_LIMIT = 1e12


@dataclass(frozen=True)
class LatticeSwitchParams:
    """Element values of the lattice switch.

    l0 is the small (selected-path) inductance; the de-selected pair is
    l0/epsilon.  Which physical arm pair is which follows from `state`.
    """

    l0: float
    epsilon: float
    c: float
    z0: float = 50.0
    state: SwitchState = SwitchState.THROUGH

    def __post_init__(self):
        if self.l0 <= 0 or self.c <= 0 or self.z0 <= 0:
            raise ValueError("l0, c and z0 must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    def arm_inductances(self):
        """(l_through, l_crossed) for the current switch state."""
        if self.state is SwitchState.THROUGH:
            return self.l0, self.l0 / self.epsilon
        return self.l0 / self.epsilon, self.l0


@dataclass(frozen=True)
class FourPortS:
    """4x4 scattering matrix at a single angular frequency."""

    entries: np.ndarray
    omega: float

    def db(self, out_port: int, in_port: int) -> float:
        return 20.0 * np.log10(abs(self.entries[out_port - 1, in_port - 1]))


FIG2_PARAMS = LatticeSwitchParams(
    l0=0.94e-9, epsilon=2.5e-2, c=270e-15, z0=50.0, state=SwitchState.CROSSED
)


def incidence_matrix() -> np.ndarray:
    """8x4 incidence matrix: chords 1-4 are the arm inductors (1-2, 1-4,
    3-2, 3-4), chords 5-8 the node capacitors to ground."""
    return np.array(
        [
            [1, -1, 0, 0],
            [1, 0, 0, -1],
            [0, -1, 1, 0],
            [0, 0, 1, -1],
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
        ],
        dtype=int,
    )


def primitive_admittance(params: LatticeSwitchParams, omega: float) -> np.ndarray:
    """8x8 diagonal chord admittance matrix at omega."""
    if omega <= 0:
        raise DcSingularityError("dc singularity: inductive chords at omega <= 0")
    lt, lc = params.arm_inductances()
    y_lt = 1.0 / (1j * omega * lt)
    y_lc = 1.0 / (1j * omega * lc)
    y_c = 1j * omega * params.c
    return np.diag([y_lt, y_lc, y_lc, y_lt, y_c, y_c, y_c, y_c])


def admittance_matrix(params: LatticeSwitchParams, omega: float) -> np.ndarray:
    """Nodal admittance Y = A^T y A of the switch at omega."""
    a = incidence_matrix()
    y = primitive_admittance(params, omega)
    out = a.T @ y @ a
    if not np.all(np.isfinite(out)):
        raise DcSingularityError("non-finite admittance at omega = %g" % omega)
    return out


def scattering_matrix(params: LatticeSwitchParams, omega: float) -> FourPortS:
    """Exact four-port scattering at omega.

    Raises SingularNetworkError when (I + Z0 Y) is ill-conditioned beyond
    the 1e12 guard.
    """
    y = admittance_matrix(params, omega)
    m = np.eye(4) + params.z0 * y
    if np.linalg.cond(m) > COND_LIMIT:
        raise SingularNetworkError(
            "scattering matrix singular near omega = %g rad/s" % omega
        )
    s = np.linalg.solve(m, np.eye(4) - params.z0 * y)
    return FourPortS(entries=s, omega=omega)


def matched_capacitance(l0: float, z0: float, omega: float) -> float:
    """Capacitance satisfying l0/(2c) = Z0^2/(1 + (Z0 c w)^2) at omega.

    Returns the smaller (physical) root; no real solution exists once
    omega > Z0/l0.
    """
    a = l0 * omega**2 * z0**2
    disc = 4 * z0**4 - 4 * a * l0
    if disc < 0:
        raise MatchConditionError(
            "no matching capacitance exists at omega = %g (requires omega <= Z0/l0)"
            % omega
        )
    return (2 * z0**2 - np.sqrt(disc)) / (2 * a)


def matched_inductance(c: float, z0: float, omega: float) -> float:
    """Inductance satisfying the match condition at omega for given c."""
    x = z0 * c * omega
    return 2 * c * z0**2 / (1 + x * x)


def scattering_first_order(
    params: LatticeSwitchParams, omega: float, match_rtol: float = 1e-6
):
    """First-order-in-epsilon |S11|, |S21|, |S31|, |S41| of the matched switch.

    Uses the crossed-state expansion (l_t = l0/eps, l_c = l0); through-state
    values follow by relabelling output ports 2 and 4.  The match condition
    l0/(2c) = Z0^2/(1 + w^2 tc^2) must hold at omega to within match_rtol,
    otherwise MatchConditionError reports the element value that would
    satisfy it.
    """
    l0, c, z0, eps = params.l0, params.c, params.z0, params.epsilon
    target = z0**2 / (1 + (z0 * c * omega) ** 2)
    actual = l0 / (2 * c)
    if abs(actual - target) > match_rtol * target:
        l_req = matched_inductance(c, z0, omega)
        try:
            c_req = matched_capacitance(l0, z0, omega)
            c_msg = "c = %.6g F" % c_req
        except MatchConditionError:
            c_msg = "no real c exists at this frequency"
        raise MatchConditionError(
            "match condition violated (l0/2c = %.6g, required %.6g): "
            "use l0 = %.6g H, or %s" % (actual, target, l_req, c_msg)
        )
    x = z0 * c * omega
    s11 = eps * abs(x * x - 1) / (2 * x)
    s31 = eps * (x * x + 1) / (2 * x)
    s41 = abs((1j + x) / (1j - x) - 1j * eps * (x + 1j) ** 2 / (2 * x))
    if params.state is SwitchState.CROSSED:
        return np.array([s11, s11, s31, s41])
    return np.array([s11, s41, s31, s11])


def bode_fano_check(l_small: float, z0: float, gamma_db: float, band) -> dict:
    """Flat-|Gamma| Bode-Fano budget for a series-RL-like load.

    lhs = -ln|Gamma| * (w_hi - w_lo) for a reflection held at gamma_db over
    band = (f_lo, f_hi) in Hz; rhs = pi R / L.
    """
    f_lo, f_hi = band
    if f_hi <= f_lo or f_lo < 0:
        raise ValueError("band must satisfy f_hi > f_lo >= 0")
    if gamma_db > 0:
        raise ValueError("gamma_db must be <= 0")
    gamma = 10.0 ** (gamma_db / 20.0)
    lhs = -np.log(gamma) * 2 * np.pi * (f_hi - f_lo)
    rhs = np.pi * z0 / l_small
    return {"integral_lhs": lhs, "bound_rhs": rhs, "satisfied": bool(lhs < rhs)}


def frequency_sweep(
    params: LatticeSwitchParams, f_start: float, f_stop: float, points: int = 801
):
    """Sweep the exact scattering matrix over a linear frequency grid.

    Returns (frequencies_hz, S-array of shape (points, 4, 4)).
    """
    if points < 2 or f_stop <= f_start:
        raise ValueError("need f_stop > f_start and at least 2 points")
    freqs = np.linspace(f_start, f_stop, points)
    out = np.empty((points, 4, 4), complex)
    for i, f in enumerate(freqs):
        out[i] = scattering_matrix(params, 2 * np.pi * f).entries
    return freqs, out


def with_state(params: LatticeSwitchParams, state: SwitchState) -> LatticeSwitchParams:
    return replace(params, state=state)
