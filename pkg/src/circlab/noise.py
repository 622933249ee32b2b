"""Noise emitted from the flux-control port of a driven dc-SQUID.

The asymmetric two-junction SQUID with negligible loop inductance reduces
to a single junction with flux-dependent critical current and phase offset:

    I(phi, u) = I0(1+d) sin(phi+u) + I0(1-d) sin(phi-u)
              = Ic(u) sin(phi + delta(u)),
    Ic(u) = 2 I0 sqrt(cos^2 u + d^2 sin^2 u),  delta(u) = atan2(d sin u, cos u),

with u the flux angle (frustration at u = pi/2, i.e. half a flux quantum).
The classical equation of motion for the reduced phase, with the load
network as a single resistor calibrated from the small-signal quality
factor, is integrated with a fixed-step RK4 whose step is set by the
plasma-frequency stability bound; drive quantities are precomputed on the
half-step grid.  A scipy adaptive path is available for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import h as H_PLANCK
from scipy.constants import physical_constants

from .transient import DriveKind, FluxDrive, build_flux_waveform, flux_waveform_rate

PHI0 = physical_constants["mag. flux quantum"][0]

# physical flux per unit flux angle: u = pi/2 at half a flux quantum
FLUX_PER_ANGLE = PHI0 / np.pi

# drive amplitude of the noise scenarios: a quarter flux quantum, u in 0..pi/4
QUARTER_QUANTUM = np.pi / 4

OUTPUT_NYQUIST = 32e9
BINS_PER_DRIVE_PERIOD = 32


class IntegrationError(RuntimeError):
    """Non-finite state during the SQUID integration."""


@dataclass(frozen=True)
class SquidNoiseParams:
    asymmetry: float = 0.05
    cj: float = 180e-15
    q_factor: float = 3.5
    z0: float = 50.0
    i0_nominal: float = 9e-6

    def __post_init__(self):
        if not 0 <= self.asymmetry < 1:
            raise ValueError("asymmetry must lie in [0, 1)")
        if self.q_factor <= 0 or self.cj <= 0 or self.i0_nominal <= 0:
            raise ValueError("cj, q_factor and i0_nominal must be positive")

    def critical_current(self, u):
        d = self.asymmetry
        return 2 * self.i0_nominal * np.sqrt(np.cos(u) ** 2 + (d * np.sin(u)) ** 2)

    def phase_offset(self, u):
        return np.arctan2(self.asymmetry * np.sin(u), np.cos(u))

    def r_eff(self) -> float:
        """Load resistance giving the requested small-signal Q at u = 0."""
        lj0 = PHI0 / (2 * np.pi * self.critical_current(0.0))
        return self.q_factor * math.sqrt(lj0 / self.cj)

    def plasma_frequency(self) -> float:
        """Unbiased plasma frequency (rad/s)."""
        lj0 = PHI0 / (2 * np.pi * self.critical_current(0.0))
        return 1.0 / math.sqrt(lj0 * self.cj)


@dataclass
class SquidRecord:
    """Steady-state load-voltage record from one integration."""

    v: np.ndarray
    sample_rate: float
    drive: FluxDrive
    params: SquidNoiseParams
    r_eff: float
    kept_periods: int
    phi_final: float
    # optional audit channels sampled with v
    emf_power: float = 0.0
    parametric_power: float = 0.0
    dissipated_power: float = 0.0


@dataclass(frozen=True)
class OccupancySpectrum:
    frequency_hz: np.ndarray
    n_ss: np.ndarray


def noise_drive(
    omega_mod: float, cap_hz: float, kind: DriveKind, amplitude: float = QUARTER_QUANTUM
) -> FluxDrive:
    """Flux drive for the noise circuit: square-wave synthesis capped at
    cap_hz, toggling the flux angle between 0 and `amplitude`."""
    f_mod = omega_mod / (2 * np.pi)
    harmonics = int(np.floor(cap_hz / f_mod))
    if harmonics < 1:
        raise ValueError("bandwidth cap below the modulation frequency")
    return FluxDrive(
        omega_mod=omega_mod, harmonics=harmonics, kind=kind, amplitude=amplitude
    )


def _output_rate(f_mod: float) -> float:
    return f_mod * 2 ** int(np.ceil(np.log2(OUTPUT_NYQUIST / f_mod)))


def integrate_squid(
    params: SquidNoiseParams,
    drive: FluxDrive,
    duration_periods: int = 64,
    keep_periods: int = 32,
    step: float = 2e-12,
    method: str = "rk4",
    rtol: float = 1e-8,
    initial_state: tuple = (0.0, 0.0),
) -> SquidRecord:
    """Integrate the reduced SQUID equation of motion under a flux drive.

    State is (phi, v) with v the load-node voltage:
        C v' = -v/R - Ic(u(t)) sin(phi + delta(u(t))) + (dPhi_phys/dt)/R,
        phi' = v / (Phi0/2pi).
    Returns the last keep_periods of v sampled on a uniform grid, plus the
    time-averaged energy-audit channels over the kept window.
    """
    if duration_periods < 50:
        raise ValueError("duration must cover at least 50 modulation periods")
    if keep_periods > duration_periods or keep_periods < 1:
        raise ValueError("keep_periods must lie in 1..duration_periods")
    if drive.kind is DriveKind.IDEAL_SQUARE:
        raise ValueError("noise drive must be band-limited (no ideal square)")
    f_mod = drive.omega_mod / (2 * np.pi)
    r = params.r_eff()
    if method == "rk45":
        return _integrate_scipy(params, drive, duration_periods, keep_periods, r, rtol)
    fs_out = _output_rate(f_mod)
    # stability of explicit RK4 at the plasma frequency caps the step
    h_stab = 2.5 / params.plasma_frequency()
    dec = int(np.ceil(1.0 / (fs_out * min(step, h_stab))))
    h = 1.0 / (fs_out * dec)
    t_period = 1.0 / f_mod
    n_steps = int(round(duration_periods * t_period / h))
    t_half = np.arange(2 * n_steps + 1) * (h / 2)
    u = build_flux_waveform(drive, t_half)
    du = flux_waveform_rate(drive, t_half)
    ic = params.critical_current(u)
    delta = params.phase_offset(u)
    iemf = FLUX_PER_ANGLE * du / r
    red = PHI0 / (2 * np.pi)
    inv_c = 1.0 / params.cj
    keep_from = int(round((duration_periods - keep_periods) * t_period / h))
    ic_l = ic.tolist()
    de_l = delta.tolist()
    ie_l = iemf.tolist()
    # analytic drive derivatives for the parametric-work audit
    d = params.asymmetry
    denom = np.cos(u) ** 2 + (d * np.sin(u)) ** 2
    dic_du = 2 * params.i0_nominal * np.sin(u) * np.cos(u) * (d * d - 1.0) / np.sqrt(denom)
    dde_du = d / denom
    dic_l = (dic_du * du).tolist()
    dde_l = (dde_du * du).tolist()
    sin = math.sin
    cos = math.cos
    phi, v = float(initial_state[0]), float(initial_state[1])
    out = []
    p_emf = p_r = p_par = 0.0
    n_kept = 0
    for nst in range(n_steps):
        k = 2 * nst
        f1p = v / red
        f1v = (-v / r - ic_l[k] * sin(phi + de_l[k]) + ie_l[k]) * inv_c
        p2 = phi + 0.5 * h * f1p
        v2 = v + 0.5 * h * f1v
        f2p = v2 / red
        f2v = (-v2 / r - ic_l[k + 1] * sin(p2 + de_l[k + 1]) + ie_l[k + 1]) * inv_c
        p3 = phi + 0.5 * h * f2p
        v3 = v + 0.5 * h * f2v
        f3p = v3 / red
        f3v = (-v3 / r - ic_l[k + 1] * sin(p3 + de_l[k + 1]) + ie_l[k + 1]) * inv_c
        p4 = phi + h * f3p
        v4 = v + h * f3v
        f4p = v4 / red
        f4v = (-v4 / r - ic_l[k + 2] * sin(p4 + de_l[k + 2]) + ie_l[k + 2]) * inv_c
        phi += h / 6 * (f1p + 2 * f2p + 2 * f3p + f4p)
        v += h / 6 * (f1v + 2 * f2v + 2 * f3v + f4v)
        if nst >= keep_from:
            kk = k + 2
            if (nst - keep_from) % dec == 0:
                out.append(v)
            p_emf += ie_l[kk] * v
            p_r += v * v / r
            # flux-source work: -dU/dt|_phi with U = -red*Ic*cos(phi+delta)
            p_par += red * (
                dic_l[kk] * cos(phi + de_l[kk]) - ic_l[kk] * dde_l[kk] * sin(phi + de_l[kk])
            ) * (-1.0)
            n_kept += 1
    if not math.isfinite(phi) or not math.isfinite(v):
        raise IntegrationError("non-finite state at t = %.4g s" % (n_steps * h))
    return SquidRecord(
        v=np.array(out),
        sample_rate=fs_out,
        drive=drive,
        params=params,
        r_eff=r,
        kept_periods=keep_periods,
        phi_final=phi,
        emf_power=p_emf / n_kept,
        parametric_power=p_par / n_kept,
        dissipated_power=p_r / n_kept,
    )


def _integrate_scipy(params, drive, duration_periods, keep_periods, r, rtol):
    """Adaptive RK45 reference path (slow; used for cross-checks)."""
    from scipy.integrate import solve_ivp

    f_mod = drive.omega_mod / (2 * np.pi)
    red = PHI0 / (2 * np.pi)
    inv_c = 1.0 / params.cj
    d = params.asymmetry
    i0 = params.i0_nominal

    def rhs(t, y):
        phi, v = y
        t_arr = np.array([t])
        u = build_flux_waveform(drive, t_arr)[0]
        du = flux_waveform_rate(drive, t_arr)[0]
        cu, su = math.cos(u), math.sin(u)
        ic = 2 * i0 * math.sqrt(cu * cu + (d * su) ** 2)
        delta = math.atan2(d * su, cu)
        iemf = FLUX_PER_ANGLE * du / r
        return (v / red, (-v / r - ic * math.sin(phi + delta) + iemf) * inv_c)

    fs_out = _output_rate(f_mod)
    t_period = 1.0 / f_mod
    t_end = duration_periods * t_period
    t0 = (duration_periods - keep_periods) * t_period
    t_eval = t0 + np.arange(int(round(keep_periods * t_period * fs_out))) / fs_out
    sol = solve_ivp(
        rhs, (0.0, t_end), (0.0, 0.0), method="RK45", rtol=rtol,
        atol=[1e-12, 1e-18], t_eval=t_eval,
    )
    if not sol.success:
        raise IntegrationError("adaptive integration failed: %s" % sol.message)
    return SquidRecord(
        v=sol.y[1],
        sample_rate=fs_out,
        drive=drive,
        params=params,
        r_eff=r,
        kept_periods=keep_periods,
        phi_final=float(sol.y[0, -1]),
    )


def occupancy(
    record: SquidRecord, params: SquidNoiseParams | None = None, f_grid=(4e9, 8e9)
) -> OccupancySpectrum:
    """Steady-state photon occupancy bound n_ss(f) = p(f) / (h f).

    p(f) is the one-sided PSD of the power delivered to the load, estimated
    by a rectangular-window periodogram over the integer-period record.
    """
    v = record.v
    n = len(v)
    f_mod = record.drive.omega_mod / (2 * np.pi)
    periods = n / (record.sample_rate / f_mod)
    if abs(periods - round(periods)) > 1e-6:
        raise ValueError("record does not span an integer number of drive periods")
    spec = np.fft.rfft(v) / n * 2.0
    freqs = np.fft.rfftfreq(n, 1.0 / record.sample_rate)
    df = freqs[1] - freqs[0]
    psd = np.abs(spec) ** 2 / (2.0 * record.r_eff) / df
    with np.errstate(divide="ignore", invalid="ignore"):
        n_ss = psd / (H_PLANCK * freqs)
    n_ss[0] = 0.0
    sel = (freqs >= f_grid[0]) & (freqs <= f_grid[1])
    return OccupancySpectrum(frequency_hz=freqs[sel], n_ss=n_ss[sel])


def bin_width(record: SquidRecord) -> float:
    """Periodogram bin width; drive_frequency / kept_periods."""
    f_mod = record.drive.omega_mod / (2 * np.pi)
    return f_mod / record.kept_periods


FIG7_SCENARIOS = {
    "truncated_square_80mhz": (2 * np.pi * 80e6, 2e9, DriveKind.FOURIER_TRUNCATED),
    "sigma_80mhz": (2 * np.pi * 80e6, 2e9, DriveKind.SIGMA_APPROXIMATED),
    "sigma_15mhz": (2 * np.pi * 15e6, 750e6, DriveKind.SIGMA_APPROXIMATED),
}


def run_scenario(
    name: str, params: SquidNoiseParams | None = None, f_grid=(4e9, 8e9), **kwargs
) -> OccupancySpectrum:
    """One of the canonical flux-noise scenarios, as an occupancy spectrum."""
    if name not in FIG7_SCENARIOS:
        raise KeyError("unknown scenario %r" % name)
    omega_mod, cap_hz, kind = FIG7_SCENARIOS[name]
    params = params or SquidNoiseParams()
    drive = noise_drive(omega_mod, cap_hz, kind)
    record = integrate_squid(params, drive, **kwargs)
    return occupancy(record, params, f_grid=f_grid)
