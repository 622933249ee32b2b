"""Command execution: turn a validated RunConfig into result tables, CSV
files and a manifest.

Outputs are deterministic (fixed column order, canonical float formatting,
no timestamps) and written atomically (write-then-rename).  The
CIRCLAB_THREADS environment variable caps the worker count used for
embarrassingly parallel grids.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import design, floquet, lattice, noise, transient
from .configs import Command, ConfigError, RunConfig


class NumericalRunError(RuntimeError):
    """Computation failed downstream (exit code 3)."""


@dataclass
class TableResult:
    name: str
    columns: list
    rows: list  # list of row tuples/lists, python scalars only


@dataclass
class RunOutput:
    command: str
    tables: list
    extra_files: dict  # name -> bytes payloads (JSON exports, binary streams)
    resolved_params: dict
    defaults_applied: list


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.12g" % x
    return str(x)


def _thread_pool():
    n = os.environ.get("CIRCLAB_THREADS")
    if n is None:
        return None
    try:
        workers = max(1, int(n))
    except ValueError:
        raise ConfigError("CIRCLAB_THREADS must be an integer") from None
    return ThreadPoolExecutor(max_workers=workers)


def _run_switch_sweep(p) -> RunOutput:
    params = lattice.LatticeSwitchParams(
        l0=p.l0_h,
        epsilon=p.epsilon,
        c=p.c_f,
        z0=p.z0_ohm,
        state=lattice.SwitchState(p.state),
    )
    freqs, s = lattice.frequency_sweep(params, p.f_start_hz, p.f_stop_hz, p.points)
    cols = ["frequency_hz"]
    for i in range(1, 5):
        for k in range(1, 5):
            cols += ["s%d%d_mag_db" % (i, k), "s%d%d_phase_rad" % (i, k)]
    rows = []
    for n, f in enumerate(freqs):
        row = [float(f)]
        for i in range(4):
            for k in range(4):
                z = s[n, i, k]
                row += [20 * math.log10(abs(z)), float(np.angle(z))]
        rows.append(row)
    return RunOutput("SwitchSweep", [TableResult("switch_sweep", cols, rows)], {}, {}, [])


def _floquet_objects(p):
    k_max = p.k_max
    wf = (
        floquet.Waveform.IDEAL_SQUARE
        if k_max is None
        else floquet.Waveform.FOURIER_TRUNCATED
    )
    mod = floquet.ModulationProfile(
        omega_mod=2 * math.pi * p.omega_mod_hz,
        theta=p.theta_rad,
        k_max=k_max,
        waveform=wf,
    )
    delay = floquet.DelayLineModel(
        tau=p.resolved_tau(),
        beta=p.beta,
        tan_delta=p.tan_delta,
        omega_center=2 * math.pi * p.f_center_hz,
    )
    return mod, delay


def _run_floquet(p) -> RunOutput:
    mod, delay = _floquet_objects(p)
    s = floquet.circulator_scattering(
        mod, delay, m_max=p.m_max, amendment_phase=p.amendment_phase_rad
    )
    m = floquet.metrics(s)
    cols = ["insertion_loss_db", "isolation_db", "return_loss_db", "largest_sideband_db"]
    rows = [[m[c] for c in cols]]
    extra = {}
    if p.export_matrix:
        payload = {"m_max": s.m_max, "entries_re_im": s.to_nested_lists()}
        extra["floquet_matrix.json"] = json.dumps(payload, sort_keys=True).encode()
    return RunOutput("Floquet", [TableResult("floquet_metrics", cols, rows)], extra, {}, [])


def _run_floquet_surface(p) -> RunOutput:
    freqs = np.linspace(p.f_start_hz, p.f_stop_hz, p.f_points)
    omegaexp = 2 * math.pi * p.omega_mod_hz
    pool = _thread_pool()
    try:
        if pool is None:
            disp = floquet.dispersion_surface(p.beta_values, freqs, omega_mod=omegaexp, m_max=p.m_max)
        else:
            chunks = pool.map(
                lambda b: floquet.dispersion_surface([b], freqs, omega_mod=omegaexp, m_max=p.m_max),
                p.beta_values,
            )
            disp = [row for chunk in chunks for row in chunk]
        bw = floquet.bandwidth_surface(p.k_max_values, freqs, omega_mod=omegaexp, m_max=p.m_max)
    finally:
        if pool is not None:
            pool.shutdown()
    cols = ["sweep_param", "frequency_hz", "insertion_loss_db", "isolation_db"]
    t1 = TableResult("fig6_dispersion", cols, [[r[c] for c in cols] for r in disp])
    t2 = TableResult("fig6_bandwidth", cols, [[r[c] for c in cols] for r in bw])
    return RunOutput("FloquetSurface", [t1, t2], {}, {}, [])


def _transient_config(p) -> transient.TransientConfig:
    omega_mod = 2 * math.pi * p.omega_mod_hz
    arr = transient.TunableInductorArray(
        n_cells=p.n_cells,
        l0_total=p.l0_total_h,
        epsilon=p.epsilon,
        lg_total=p.lg_total_h,
        cj=p.cj_f,
    )
    kind = transient.DriveKind(p.drive_kind)
    return transient.TransientConfig(
        drive_tone=transient.DriveTone(
            frequency=p.spectrum_tone_hz, port=p.drive_port, amplitude=p.tone_amplitude_sqrtw
        ),
        sample_rate=p.sample_rate_hz,
        z0=p.z0_ohm,
        tau=p.resolved_tau(),
        matching_c=p.matching_c_f,
        settle_periods=p.settle_periods,
        window_periods=p.window_periods,
        settle_rtol=p.settle_rtol,
        element_law=transient.ElementLaw(p.element_law),
        explicit_cells=p.explicit_cells,
        array_a=arr,
        array_b=arr,
        drive_a=transient.FluxDrive(omega_mod=omega_mod, phase=0.0, harmonics=p.harmonics, kind=kind),
        drive_b=transient.FluxDrive(
            omega_mod=omega_mod, phase=-math.pi / 2, harmonics=p.harmonics, kind=kind
        ),
    )


def _run_transient(p) -> RunOutput:
    cfg = _transient_config(p)
    n_steps = int(round((p.f_stop_hz - p.f_start_hz) / p.f_step_hz))
    freqs = p.f_start_hz + p.f_step_hz * np.arange(n_steps + 1)
    results = transient.run_transient_sweep(cfg, freqs)
    table = transient.extract_sparams(results)
    cols = ["frequency_hz"]
    for i in range(1, 5):
        cols += ["s%d1_mag_db" % i, "s%d1_phase_rad" % i]
    cols.append("settled")
    rows = []
    for n, f in enumerate(table["frequency_hz"]):
        row = [float(f)]
        for i in range(4):
            z = table["s"][i, n]
            row += [20 * math.log10(abs(z) + 1e-300), float(np.angle(z))]
        row.append(bool(table["settled"][n]))
        rows.append(row)
    t_sparams = TableResult("s_params", cols, rows)

    spec_res = transient.run_transient(cfg)
    sfreq, sdb = transient.output_spectrum(spec_res, port=p.spectrum_port)
    t_spec = TableResult(
        "spectrum",
        ["frequency_hz", "power_db_rel_inc"],
        [[float(f), float(v)] for f, v in zip(sfreq, sdb)],
    )
    extra = {}
    if p.export_waveforms != "none":
        dt = 1.0 / spec_res.sample_rate
        t0 = spec_res.window_t0
        for name, arr in spec_res.records.items():
            if p.export_waveforms == "csv":
                lines = ["time_s,value"]
                lines += [
                    "%s,%s" % (_fmt(t0 + k * dt), _fmt(float(v)))
                    for k, v in enumerate(arr)
                ]
                extra["wave_%s.csv" % name] = ("\n".join(lines) + "\n").encode()
            else:
                extra["wave_%s.f64" % name] = arr.astype("<f8").tobytes()
    return RunOutput("Transient", [t_sparams, t_spec], extra, {}, [])


def _run_optimize(p) -> RunOutput:
    point = design.DesignPoint(
        omega_mod=2 * math.pi * p.f_start_hz,  # placeholder; replaced per grid point
        tan_delta=p.tan_delta,
        dispersion_per_80mhz=p.dispersion_per_80mhz,
        omega_b=2 * math.pi * p.omega_b_hz,
        pitch=p.pitch_m,
        band=(2 * math.pi * p.band_lo_hz, 2 * math.pi * p.band_hi_hz),
    )
    grid = design.modulation_grid(p.f_start_hz, p.f_stop_hz, p.points)
    pool = _thread_pool()
    try:
        rows_d = design.design_table(point, grid, executor=pool)
    finally:
        if pool is not None:
            pool.shutdown()
    cols = ["omega_mod_hz", "area_mm2", "dielectric_db", "dispersion_db", "finite_bw_db", "total_db"]
    rows = [[r[c] for c in cols] for r in rows_d]
    return RunOutput("Optimize", [TableResult("design_space", cols, rows)], {}, {}, [])


def _run_noise(p) -> RunOutput:
    params = noise.SquidNoiseParams(
        asymmetry=p.asymmetry,
        cj=p.cj_f,
        q_factor=p.q_factor,
        z0=p.z0_ohm,
        i0_nominal=p.i0_a,
    )
    tables = []
    for name in p.scenarios:
        omega_mod, cap_hz, kind = noise.FIG7_SCENARIOS[name]
        drive = noise.noise_drive(omega_mod, cap_hz, kind, amplitude=p.amplitude_rad)
        record = noise.integrate_squid(
            params, drive, duration_periods=p.duration_periods, keep_periods=p.keep_periods
        )
        occ = noise.occupancy(record, params, f_grid=(p.f_lo_hz, p.f_hi_hz))
        rows = [[float(f), float(n)] for f, n in zip(occ.frequency_hz, occ.n_ss)]
        tables.append(TableResult("noise_%s" % name, ["frequency_hz", "n_ss"], rows))
    return RunOutput("Noise", tables, {}, {}, [])


_EXECUTORS = {
    Command.SWITCH_SWEEP: _run_switch_sweep,
    Command.FLOQUET: _run_floquet,
    Command.FLOQUET_SURFACE: _run_floquet_surface,
    Command.TRANSIENT: _run_transient,
    Command.OPTIMIZE: _run_optimize,
    Command.NOISE: _run_noise,
}

_NUMERICAL_ERRORS = (
    lattice.SingularNetworkError,
    lattice.DcSingularityError,
    transient.InstabilityError,
    noise.IntegrationError,
    FloatingPointError,
    np.linalg.LinAlgError,
)


def execute(config: RunConfig) -> RunOutput:
    """Run a command and return its tables without touching the filesystem."""
    try:
        out = _EXECUTORS[config.command](config.params)
    except _NUMERICAL_ERRORS as e:
        raise NumericalRunError(
            "%s failed in module computation: %s" % (config.command.value, e)
        ) from e
    out.resolved_params = config.resolved_params()
    out.defaults_applied = list(config.defaults_applied)
    return out


def _atomic_write(path: str, data: bytes):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_circlab_")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_csv_bytes(table: TableResult) -> bytes:
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(_fmt(x) for x in row))
    return ("\n".join(lines) + "\n").encode()


def write_outputs(output: RunOutput, out_dir: str) -> dict:
    """Write tables and extra payloads to out_dir; return the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    for t in output.tables:
        files["%s.csv" % t.name] = table_csv_bytes(t)
    files.update(output.extra_files)
    entries = []
    for name in sorted(files):
        data = files[name]
        _atomic_write(os.path.join(out_dir, name), data)
        entries.append({"file": name, "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {
        "command": output.command,
        "resolved_params": output.resolved_params,
        "defaults_applied": output.defaults_applied,
        "outputs": entries,
    }
    _atomic_write(
        os.path.join(out_dir, "manifest.json"),
        (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode(),
    )
    return manifest


def run(config: RunConfig, out_dir: str | None = None) -> dict:
    """Execute a config and write its outputs; returns the manifest."""
    output = execute(config)
    return write_outputs(output, out_dir or config.output_dir)
