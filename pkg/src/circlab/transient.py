"""Fixed-step time-domain co-simulation of two flux-modulated lattice
switches joined by matched delay lines.

Each switch is solved nodally with trapezoidal companion models; the delay
lines are travelling-wave buffers (matched, so they decouple the two
switches' conductance matrices, which are pre-factored per time step).  The
tunable inductors follow the flux-dependent element law with the
flux-conserving branch equation v = d(L i)/dt by default.

A single time-stepping pass can carry many probe tones at once: the
network is linear and time-varying, so the factored conductance matrices
are shared and only the right-hand sides differ per tone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class DriveKind(enum.Enum):
    IDEAL_SQUARE = "ideal_square"
    FOURIER_TRUNCATED = "fourier_truncated"
    SIGMA_APPROXIMATED = "sigma_approximated"
    STATIC = "static"  # flux held at `amplitude`; freezes the switch state


class ElementLaw(enum.Enum):
    FLUX = "flux"  # v = d(L i)/dt, flux-conserving
    DIDT = "didt"  # v = L di/dt, ignores I dL/dt


class InstabilityError(RuntimeError):
    """State magnitude exceeded the blow-up guard."""


@dataclass(frozen=True)
class FluxDrive:
    """Band-limited square-wave flux bias toggling between 0 and amplitude."""

    omega_mod: float
    phase: float = 0.0
    harmonics: int = 25
    kind: DriveKind = DriveKind.FOURIER_TRUNCATED
    amplitude: float = np.pi / 2

    def __post_init__(self):
        if self.omega_mod <= 0:
            raise ValueError("omega_mod must be positive")
        if self.harmonics < 1:
            raise ValueError("harmonics must be >= 1")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")


def build_flux_waveform(drive: FluxDrive, t) -> np.ndarray:
    """Sampled flux values on a time grid.

    The waveform toggles between 0 and `amplitude`: amp/2 + amp/2 * s(t)
    with s the square-wave synthesis selected by `kind`.  FourierTruncated
    keeps odd harmonics up to index `harmonics` (no spectral weight above
    harmonics*Omega); SigmaApproximated additionally applies Lanczos
    sinc(n/(harmonics+1)) factors.
    """
    t = np.asarray(t, float)
    if drive.kind is DriveKind.STATIC:
        return np.full(t.shape, drive.amplitude)
    x = drive.omega_mod * t + drive.phase
    if drive.kind is DriveKind.IDEAL_SQUARE:
        s = np.sign(np.sin(x))
        s[s == 0] = 1.0
    else:
        n = np.arange(1, drive.harmonics + 1, 2).astype(float)
        amp = (4.0 / np.pi) / n
        if drive.kind is DriveKind.SIGMA_APPROXIMATED:
            amp = amp * np.sinc(n / (drive.harmonics + 1))
        s = np.sin(x[:, None] * n[None, :]) @ amp
    return drive.amplitude / 2.0 * (1.0 + s)


def flux_waveform_rate(drive: FluxDrive, t) -> np.ndarray:
    """Analytic d(flux)/dt for band-limited drives (undefined for the ideal
    square's jumps, which have no finite rate)."""
    if drive.kind is DriveKind.IDEAL_SQUARE:
        raise ValueError("ideal square has no finite flux rate at its edges")
    t = np.asarray(t, float)
    if drive.kind is DriveKind.STATIC:
        return np.zeros(t.shape)
    x = drive.omega_mod * t + drive.phase
    n = np.arange(1, drive.harmonics + 1, 2).astype(float)
    amp = (4.0 / np.pi) / n
    if drive.kind is DriveKind.SIGMA_APPROXIMATED:
        amp = amp * np.sinc(n / (drive.harmonics + 1))
    return drive.amplitude / 2.0 * (np.cos(x[:, None] * n[None, :]) @ (amp * n * drive.omega_mod))


@dataclass(frozen=True)
class TunableInductorArray:
    """Series array of flux-tunable cells forming one lattice arm."""

    n_cells: int = 46
    l0_total: float = 1.02e-9
    epsilon: float = 2.5e-2
    lg_total: float = 207e-12
    cj: float = 180e-15

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.l0_total <= 0 or not 0 < self.epsilon < 1:
            raise ValueError("l0_total must be positive and epsilon in (0, 1)")
        if self.lg_total < 0 or self.cj < 0:
            raise ValueError("lg_total and cj must be non-negative")

    def cell_inductance(self, phi):
        l0 = self.l0_total / self.n_cells
        lg = self.lg_total / self.n_cells
        return l0 / np.sqrt(
            self.epsilon**2 + (1 - 2 * self.epsilon) * np.cos(phi) ** 2
        ) + lg

    def arm_inductance(self, phi):
        """Collapsed arm inductance N * l(phi)."""
        return self.n_cells * self.cell_inductance(phi)

    def arm_capacitance(self):
        """Collapsed parallel capacitance cj / N across the whole arm."""
        return self.cj / self.n_cells

    def stiffest_resonance(self) -> float:
        """Highest internal LC resonance (Hz); 0 when no cell capacitance."""
        if self.cj == 0:
            return 0.0
        l_max = self.cell_inductance(np.pi / 2)
        return 1.0 / (2 * np.pi * math.sqrt(l_max * self.cj))


@dataclass(frozen=True)
class DriveTone:
    """Probe tone: incident-wave amplitude in sqrt(W) at one port."""

    frequency: float
    port: int = 1
    amplitude: float = 1.0

    def __post_init__(self):
        if self.port not in (1, 2, 3, 4):
            raise ValueError("port must be 1..4")
        if self.frequency <= 0 or self.amplitude < 0:
            raise ValueError("frequency must be positive and amplitude non-negative")


@dataclass(frozen=True)
class TransientConfig:
    drive_tone: DriveTone
    sample_rate: float = 163.84e9
    z0: float = 50.0
    tau: float | None = None
    matching_c: float = 270e-15
    settle_periods: int = 20
    window_periods: int = 16
    settle_rtol: float = 1e-4
    element_law: ElementLaw = ElementLaw.FLUX
    explicit_cells: bool = False
    array_a: TunableInductorArray = field(default_factory=TunableInductorArray)
    array_b: TunableInductorArray = field(default_factory=TunableInductorArray)
    drive_a: FluxDrive = field(default_factory=lambda: FluxDrive(omega_mod=2 * np.pi * 80e6))
    drive_b: FluxDrive = field(
        default_factory=lambda: FluxDrive(omega_mod=2 * np.pi * 80e6, phase=-np.pi / 2)
    )

    def __post_init__(self):
        if self.drive_a.omega_mod != self.drive_b.omega_mod:
            raise ValueError("both switches must share the modulation rate")
        if self.tau is None:
            object.__setattr__(self, "tau", np.pi / (2 * self.drive_a.omega_mod))
        spp = self.sample_rate * 2 * np.pi / self.drive_a.omega_mod
        if abs(spp - round(spp)) > 1e-6:
            raise ValueError("sample_rate must be commensurate with the modulation period")
        d = self.tau * self.sample_rate
        if abs(d - round(d)) > 1e-6 or round(d) < 1:
            raise ValueError("tau * sample_rate must be an exact positive integer")
        f_stiff = max(a.stiffest_resonance() for a in (self.array_a, self.array_b))
        if f_stiff > 0 and self.sample_rate < 8 * f_stiff:
            raise ValueError(
                "sample_rate %.3g resolves the %.3g Hz resonance with < 8 samples/period"
                % (self.sample_rate, f_stiff)
            )

    @property
    def mod_period(self) -> float:
        return 2 * np.pi / self.drive_a.omega_mod


@dataclass
class TransientResult:
    """Steady-state measurement for one probe tone."""

    frequency: float
    s_column: np.ndarray  # complex S_i1 (or S_i,drive_port), i = 1..4
    settled: bool
    rms_final_rel_change: float
    incident_power: float
    port_powers: np.ndarray
    window_periods: int
    mod_frequency: float
    sample_rate: float
    drive_port: int
    records: dict | None = None  # {'a': incident wave, 'b1'..'b4': outgoing}
    window_t0: float = 0.0


def _switch_topology(n_cells: int):
    """Node count and branch lists of one switch.

    Main nodes 0..3 (labelled by the port they face); arms (0-1) and (2-3)
    are through-type, (0-3) and (2-1) crossed-type.  With explicit cells
    each arm becomes a chain of n_cells inductors with per-cell parallel
    capacitors, adding n_cells-1 interior nodes per arm.
    """
    arms = [(0, 1, "t"), (0, 3, "c"), (2, 1, "c"), (2, 3, "t")]
    n_nodes = 4
    inductors = []  # (i, k, type)
    cell_caps = []  # (i, k)
    for (a, b, typ) in arms:
        prev = a
        for c in range(n_cells - 1):
            node = n_nodes
            n_nodes += 1
            inductors.append((prev, node, typ))
            cell_caps.append((prev, node))
            prev = node
        inductors.append((prev, b, typ))
        cell_caps.append((prev, b))
    return n_nodes, inductors, cell_caps


class _SwitchBlock:
    """Per-switch trapezoidal companion assembly shared by all tones."""

    def __init__(self, array, drive, config, n_steps, h, n_tones):
        n_cells = array.n_cells if config.explicit_cells else 1
        self.nn, self.inductors, self.cell_caps = _switch_topology(n_cells)
        self.h = h
        t1 = (np.arange(n_steps) + 1) * h
        flux_crossed = build_flux_waveform(drive, t1)
        flux_through = drive.amplitude - flux_crossed
        if config.explicit_cells:
            lt = array.cell_inductance(flux_through)
            lc = array.cell_inductance(flux_crossed)
            c_cell = array.cj
        else:
            lt = array.arm_inductance(flux_through)
            lc = array.arm_inductance(flux_crossed)
            c_cell = array.arm_capacitance()
        self.l_of_t = {"t": lt, "c": lc}
        self.law = config.element_law
        nn = self.nn
        gs = np.zeros((nn, nn))
        for node in range(4):
            gs[node, node] += 1.0 / config.z0  # port or line termination
            if config.matching_c > 0:
                gs[node, node] += 2 * config.matching_c / h
        gc_cell = 2 * c_cell / h
        for (i, k) in self.cell_caps:
            if gc_cell > 0:
                gs[i, i] += gc_cell
                gs[k, k] += gc_cell
                gs[i, k] -= gc_cell
                gs[k, i] -= gc_cell
        self.gc_cell = gc_cell
        self.gc_sh = 2 * config.matching_c / h
        # incidence of inductive branches: B[node, branch]
        nb = len(self.inductors)
        binc = np.zeros((nn, nb))
        for j, (i, k, _) in enumerate(self.inductors):
            binc[i, j] = 1.0
            binc[k, j] = -1.0
        self.binc = binc
        self.bt = binc.T.copy()
        self.types = np.array([0 if t == "t" else 1 for (_, _, t) in self.inductors])
        # pre-factored conductance matrices; only two distinct arm values per step
        gl_t = h / (2 * lt)
        gl_c = h / (2 * lc)
        et = np.zeros((nn, nn))
        ec = np.zeros((nn, nn))
        for j, (i, k, typ) in enumerate(self.inductors):
            e = et if typ == "t" else ec
            e[i, i] += 1.0
            e[k, k] += 1.0
            e[i, k] -= 1.0
            e[k, i] -= 1.0
        if nn <= 8:
            g = gs[None] + gl_t[:, None, None] * et[None] + gl_c[:, None, None] * ec[None]
            self.g_inv = np.linalg.inv(g)
            self.g_seq = None
        else:  # explicit arrays: solve per step instead of storing inverses
            self.g_inv = None
            self.g_static = gs
            self.et, self.ec = et, ec
            self.gl_t, self.gl_c = gl_t, gl_c
        # branch inductance per step
        self.l_seq = np.where(self.types[None, :] == 0, lt[:, None], lc[:, None])
        # states (per tone)
        self.v = np.zeros((nn, n_tones))
        self.u = np.zeros((nb, n_tones))
        self.lam = np.zeros((nb, n_tones))
        self.i_l = np.zeros((nb, n_tones))  # used by the di/dt law
        self.ic_cell = np.zeros((nb, n_tones))
        self.ish = np.zeros((nn, n_tones))

    def step(self, n, extra_rhs):
        """Advance one trapezoidal step; extra_rhs holds source currents."""
        l_now = self.l_seq[n][:, None]
        if self.law is ElementLaw.FLUX:
            jl = (self.lam + (self.h / 2) * self.u) / l_now
        else:
            l_prev = self.l_seq[n - 1][:, None] if n > 0 else l_now
            jl = self.i_l + (self.h / 2) * self.u / l_prev
        jc = self.gc_cell * self.u + self.ic_cell
        rhs = extra_rhs + self.binc @ (jc - jl)
        if self.gc_sh > 0:
            rhs[:4] += self.gc_sh * self.v[:4] + self.ish[:4]
        if self.g_inv is not None:
            v1 = self.g_inv[n] @ rhs
        else:
            g = (
                self.g_static
                + self.gl_t[n] * self.et
                + self.gl_c[n] * self.ec
            )
            v1 = np.linalg.solve(g, rhs)
        u1 = self.bt @ v1
        if self.law is ElementLaw.FLUX:
            self.lam += (self.h / 2) * (self.u + u1)
        else:
            l_prev = self.l_seq[n - 1][:, None] if n > 0 else l_now
            self.i_l += (self.h / 2) * (self.u / l_prev + u1 / l_now)
        self.ic_cell = self.gc_cell * (u1 - self.u) - self.ic_cell
        if self.gc_sh > 0:
            self.ish[:4] = self.gc_sh * (v1[:4] - self.v[:4]) - self.ish[:4]
        self.u = u1
        self.v = v1
        return v1


def _integrate(config: TransientConfig, frequencies, store_records):
    fs = config.sample_rate
    h = 1.0 / fs
    spp = int(round(fs * config.mod_period))
    n_steps = (config.settle_periods + config.window_periods) * spp
    delay_samples = int(round(config.tau * fs))
    freqs = np.asarray(frequencies, float)
    n_tones = len(freqs)
    w_t = 2 * np.pi * freqs
    twin = config.window_periods * config.mod_period
    cycles = freqs * twin
    if np.any(np.abs(cycles - np.round(cycles)) > 1e-6):
        bad = freqs[np.abs(cycles - np.round(cycles)) > 1e-6]
        raise ValueError(
            "tone(s) %s not commensurate with the measurement window; "
            "use multiples of %g Hz" % (bad, 1.0 / twin)
        )

    sw_a = _SwitchBlock(config.array_a, config.drive_a, config, n_steps, h, n_tones)
    sw_b = _SwitchBlock(config.array_b, config.drive_b, config, n_steps, h, n_tones)
    z0 = config.z0
    sq_z0 = math.sqrt(z0)
    # port -> (switch, local node); lines join A1<->B0 and A3<->B2
    port_nodes = {1: (sw_a, 0), 2: (sw_b, 1), 3: (sw_a, 2), 4: (sw_b, 3)}
    drive_sw, drive_node = port_nodes[config.drive_tone.port]
    amp_v = 2 * sq_z0 * config.drive_tone.amplitude
    buf = np.zeros((2, 2, delay_samples, n_tones))
    idx = 0
    win_start = config.settle_periods * spp
    rot = np.exp(-1j * w_t * h)
    phasor = rot.copy()
    proj_b = np.zeros((4, n_tones), complex)
    proj_a = np.zeros(n_tones, complex)
    pow_b = np.zeros((4, n_tones))
    pow_a = np.zeros(n_tones)
    per_rms = np.zeros((config.settle_periods + config.window_periods, n_tones))
    recs_a = [] if store_records else None
    recs_b = [[] for _ in range(4)] if store_records else None
    guard = 1e6 * config.drive_tone.amplitude if config.drive_tone.amplitude > 0 else np.inf

    for n in range(n_steps):
        vs = amp_v * np.sin(w_t * ((n + 1) * h))
        rhs_a = np.zeros((sw_a.nn, n_tones))
        rhs_b = np.zeros((sw_b.nn, n_tones))
        (rhs_a if drive_sw is sw_a else rhs_b)[drive_node] += vs / z0
        b_in_b0 = buf[0, 0, idx].copy()
        b_in_a1 = buf[0, 1, idx].copy()
        b_in_b2 = buf[1, 0, idx].copy()
        b_in_a3 = buf[1, 1, idx].copy()
        rhs_a[1] += 2 * b_in_a1 / sq_z0
        rhs_a[3] += 2 * b_in_a3 / sq_z0
        rhs_b[0] += 2 * b_in_b0 / sq_z0
        rhs_b[2] += 2 * b_in_b2 / sq_z0
        va = sw_a.step(n, rhs_a)
        vb = sw_b.step(n, rhs_b)
        a_inc = vs / (2 * sq_z0)
        b_ports = np.stack(
            [va[0] / sq_z0, vb[1] / sq_z0, va[2] / sq_z0, vb[3] / sq_z0]
        )
        b_ports[config.drive_tone.port - 1] -= a_inc
        buf[0, 0, idx] = va[1] / sq_z0 - b_in_a1
        buf[0, 1, idx] = vb[0] / sq_z0 - b_in_b0
        buf[1, 0, idx] = va[3] / sq_z0 - b_in_a3
        buf[1, 1, idx] = vb[2] / sq_z0 - b_in_b2
        idx = (idx + 1) % delay_samples
        per_rms[n // spp] += (b_ports**2).sum(axis=0)
        if n >= win_start:
            proj_b += b_ports * phasor
            proj_a += a_inc * phasor
            pow_b += b_ports**2
            pow_a += a_inc**2
            if store_records:
                recs_a.append(a_inc.copy())
                for p in range(4):
                    recs_b[p].append(b_ports[p].copy())
        phasor = phasor * rot
        if (n + 1) % 4096 == 0:
            phasor /= np.abs(phasor)
            vmax = max(np.abs(va).max(), np.abs(vb).max())
            if not np.isfinite(vmax) or vmax > guard:
                raise InstabilityError(
                    "transient blow-up at t = %.6g s (|v| = %.3g)" % ((n + 1) * h, vmax)
                )

    nwin = config.window_periods * spp
    rms = np.sqrt(per_rms / spp)
    denom = np.maximum(rms[-1], 1e-300)
    rel = np.abs(rms[-1] - rms[-2]) / denom
    s_col = proj_b / proj_a
    results = []
    for i, f in enumerate(freqs):
        rec = None
        if store_records:
            rec = {"a": np.array([r[i] for r in recs_a])}
            for p in range(4):
                rec["b%d" % (p + 1)] = np.array([r[i] for r in recs_b[p]])
        results.append(
            TransientResult(
                frequency=float(f),
                s_column=s_col[:, i].copy(),
                settled=bool(rel[i] < config.settle_rtol),
                rms_final_rel_change=float(rel[i]),
                incident_power=float(pow_a[i] / nwin),
                port_powers=(pow_b[:, i] / nwin).copy(),
                window_periods=config.window_periods,
                mod_frequency=config.drive_a.omega_mod / (2 * np.pi),
                sample_rate=fs,
                drive_port=config.drive_tone.port,
                records=rec,
                window_t0=win_start * h,
            )
        )
    return results


def run_transient(config: TransientConfig) -> TransientResult:
    """Single-tone run keeping the sampled wave records."""
    return _integrate(config, [config.drive_tone.frequency], store_records=True)[0]


def run_transient_sweep(config: TransientConfig, frequencies, store_records=False):
    """One time-stepping pass carrying every probe tone; returns a result
    per tone (records omitted unless requested)."""
    if len(frequencies) == 0:
        raise ValueError("no tone frequencies given")
    return _integrate(config, frequencies, store_records=store_records)


def extract_sparams(results) -> dict:
    """First-column S(f) table from per-tone steady-state results.

    Unsettled runs are flagged, not dropped.
    """
    results = sorted(results, key=lambda r: r.frequency)
    freqs = np.array([r.frequency for r in results])
    s = np.stack([r.s_column for r in results], axis=1)
    settled = np.array([r.settled for r in results])
    return {"frequency_hz": freqs, "s": s, "settled": settled}


def output_spectrum(result: TransientResult, port: int = 2):
    """Periodogram of the outgoing wave at a port over the measurement
    window, in dB relative to the incident power.

    The window spans an exact integer number of modulation periods, so
    modulation sidebands fall on bins without leakage.
    """
    if result.records is None:
        raise ValueError("spectrum needs a run with stored records")
    if port not in (1, 2, 3, 4):
        raise ValueError("port must be 1..4")
    rec = result.records["b%d" % port]
    n = len(rec)
    periods = n / (result.sample_rate / result.mod_frequency)
    if abs(periods - round(periods)) > 1e-6:
        raise ValueError("record does not span an integer number of periods")
    spec = np.fft.rfft(rec) / n * 2.0
    freqs = np.fft.rfftfreq(n, 1.0 / result.sample_rate)
    power = np.abs(spec) ** 2 / 2.0
    with np.errstate(divide="ignore"):
        power_db = 10.0 * np.log10(power / result.incident_power + 1e-300)
    return freqs, power_db


def sweep_config(config: TransientConfig, frequency: float) -> TransientConfig:
    """Config with the probe tone retargeted to another frequency."""
    return replace(config, drive_tone=replace(config.drive_tone, frequency=frequency))
