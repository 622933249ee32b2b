"""Closed-form design-space evaluation: delay length, chip area, loss budget
versus modulation rate, plus junction design-rule arithmetic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0
from scipy.constants import physical_constants

from . import floquet

PHI0 = physical_constants["mag. flux quantum"][0]

# delay-line propagation speed on silicon, d = v * tau with tau = pi/(2 Omega)
DEFAULT_WAVE_SPEED = 2.0 * C0 / 5.0

# reference 1-dB compression: -53 dBm measured at 35 uA critical current
P1DB_REF_DBM = -53.0
P1DB_REF_I0 = 35e-6

SWITCH_AREA_M2 = 2e-6  # both switches plus periphery, "+ 2 mm^2"


@dataclass(frozen=True)
class DesignPoint:
    """One candidate operating point of the modulation-rate trade-off."""

    omega_mod: float
    tan_delta: float = 1e-5
    dispersion_per_80mhz: float = 3e-4
    omega_b: float = 2 * np.pi * 2e9
    pitch: float = 60e-6
    band: tuple = (2 * np.pi * 4e9, 2 * np.pi * 8e9)
    wave_speed: float = DEFAULT_WAVE_SPEED

    def __post_init__(self):
        if self.omega_mod <= 0:
            raise ValueError("omega_mod must be positive")

    def beta(self) -> float:
        """Fractional delay change per sideband step at this modulation rate."""
        return self.dispersion_per_80mhz * (self.omega_mod / (2 * np.pi)) / 80e6

    def k_max(self) -> int | None:
        """Largest odd harmonic fitting inside the modulation bandwidth;
        None for an unbounded bandwidth."""
        if np.isinf(self.omega_b):
            return None
        if self.omega_b < self.omega_mod:
            raise ValueError("no modulation harmonics fit in bandwidth")
        k = int(np.floor(self.omega_b / self.omega_mod))
        return k if k % 2 == 1 else k - 1


@dataclass(frozen=True)
class JunctionRule:
    """Junction design constraints for the tunable-inductor arrays."""

    epsilon: float = 2.5e-2
    f_max: float = 10e9
    min_feature: float = 2e-6
    critical_current: float = 9e-6
    n_squids: int = 40

    def plasma_frequency_min(self) -> float:
        """Lower bound on the unbiased junction plasma frequency (rad/s)."""
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        return 2 * np.pi * np.sqrt(self.epsilon) * self.f_max


def delay_length_and_area(point: DesignPoint) -> dict:
    """Quarter-period delay, meander length d = pi c0 / (5 Omega) and chip
    area 2*d*pitch + 2 mm^2."""
    tau = np.pi / (2 * point.omega_mod)
    length = point.wave_speed * tau
    area = 2 * length * point.pitch + SWITCH_AREA_M2
    return {"tau_s": tau, "length_m": length, "area_m2": area}


def dielectric_loss_db(point: DesignPoint, band_average: bool = False) -> float:
    """Attenuation of one delay pass from dielectric loss, in dB.

    Worst case (band top) by default; optional average over the signal band.
    """
    tau = np.pi / (2 * point.omega_mod)
    if band_average:
        w = np.linspace(point.band[0], point.band[1], 201)
        a = np.exp(-w * tau * point.tan_delta / 2.0)
        return float(np.mean(-20 * np.log10(a)))
    a = np.exp(-point.band[1] * tau * point.tan_delta / 2.0)
    return float(-20 * np.log10(a))


def _floquet_loss_db(k_max: int | None, beta: float) -> float:
    omega_mod = 2 * np.pi * 80e6  # loss depends only on Omega*tau = pi/2 here
    wf = (
        floquet.Waveform.IDEAL_SQUARE
        if k_max is None
        else floquet.Waveform.FOURIER_TRUNCATED
    )
    mod = floquet.ModulationProfile(
        omega_mod=omega_mod, theta=np.pi / 2, k_max=k_max, waveform=wf
    )
    dl = floquet.DelayLineModel(tau=np.pi / (2 * omega_mod), beta=beta)
    return floquet.metrics(floquet.circulator_scattering(mod, dl))["insertion_loss_db"]


def loss_budget(point: DesignPoint, band_average: bool = False) -> dict:
    """Insertion-loss budget at one modulation rate.

    dielectric_db, dispersion_db and finite_bw_db are the standalone
    channels; total_db combines dispersion and finite bandwidth in a single
    sideband evaluation (the channels are not dB-additive at the larger
    modulation rates) and adds the dielectric term.
    """
    k_max = point.k_max()
    beta = point.beta()
    dielectric = dielectric_loss_db(point, band_average=band_average)
    dispersion = _floquet_loss_db(None, beta)
    finite_bw = _floquet_loss_db(k_max, 0.0)
    combined = _floquet_loss_db(k_max, beta)
    return {
        "dielectric_db": dielectric,
        "dispersion_db": dispersion,
        "finite_bw_db": finite_bw,
        "total_db": dielectric + combined,
    }


def junction_design(rule: JunctionRule, target_l: float) -> dict:
    """Junction sizing for a target array inductance.

    Critical-current density floor comes from the plasma rule at the
    minimum feature size with the pinned critical current; the SQUID count
    uses the single-junction inductance L_J = Phi0/(2 pi I0).  The quoted
    array count (n_squids) is reported alongside the computed one; the two
    differ and neither is discarded.
    """
    if target_l <= 0:
        raise ValueError("target_l must be positive")
    if not 0 < rule.epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if rule.critical_current <= 0 or rule.min_feature <= 0:
        raise ValueError("critical_current and min_feature must be positive")
    l_j = PHI0 / (2 * np.pi * rule.critical_current)
    n = int(round(target_l / l_j))
    p1db = P1DB_REF_DBM + 10 * np.log10((rule.critical_current / P1DB_REF_I0) ** 2)
    return {
        "j_c_min": rule.critical_current / rule.min_feature**2,
        "i0": rule.critical_current,
        "l_j": l_j,
        "n_squids": n,
        "n_squids_quoted": rule.n_squids,
        "p1db_dbm": p1db,
        "plasma_frequency_min": rule.plasma_frequency_min(),
    }


def modulation_grid(
    f_start: float = 10e6, f_stop: float = 1e9, points: int = 41
) -> np.ndarray:
    """Log-spaced modulation-frequency grid (Hz) for the trade-off dataset."""
    return np.logspace(np.log10(f_start), np.log10(f_stop), points)


def design_table(point_template: DesignPoint, grid_hz, executor=None) -> list:
    """Trade-off dataset rows over a modulation-frequency grid."""
    from dataclasses import replace

    def one(f):
        p = replace(point_template, omega_mod=2 * np.pi * f)
        geo = delay_length_and_area(p)
        loss = loss_budget(p)
        return {
            "omega_mod_hz": f,
            "area_mm2": geo["area_m2"] * 1e6,
            "dielectric_db": loss["dielectric_db"],
            "dispersion_db": loss["dispersion_db"],
            "finite_bw_db": loss["finite_bw_db"],
            "total_db": loss["total_db"],
        }

    if executor is not None:
        return list(executor.map(one, grid_hz))
    return [one(f) for f in grid_hz]
