"""Run-configuration schema: strict JSON documents, one model per command.

Every physical quantity carries its unit in the key name (``omega_mod_hz``,
``tau_s``, ``c_f``, ...).  Unknown keys are rejected; defaults come from the
published component values and are reported so the manifest can list them.
"""

from __future__ import annotations

import enum
import json
import math

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


class Command(str, enum.Enum):
    SWITCH_SWEEP = "SwitchSweep"
    FLOQUET = "Floquet"
    FLOQUET_SURFACE = "FloquetSurface"
    TRANSIENT = "Transient"
    OPTIMIZE = "Optimize"
    NOISE = "Noise"


_UNIT_SUFFIXES = [
    ("_hz", "Hz"),
    ("_ghz", "GHz"),
    ("_s", "s"),
    ("_f", "F"),
    ("_h", "H"),
    ("_ohm", "Ohm"),
    ("_m", "m"),
    ("_rad", "rad"),
    ("_a", "A"),
    ("_dbm", "dBm"),
    ("_db", "dB"),
    ("_sqrtw", "sqrt(W)"),
]


def expected_unit(key: str) -> str:
    for suffix, unit in _UNIT_SUFFIXES:
        if key.endswith(suffix):
            return unit
    return "dimensionless"


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SwitchSweepParams(_Params):
    l0_h: float = 0.94e-9
    c_f: float = 270e-15
    epsilon: float = 2.5e-2
    z0_ohm: float = 50.0
    state: str = "crossed"
    f_start_hz: float = 2e9
    f_stop_hz: float = 10e9
    points: int = 801

    @field_validator("state")
    @classmethod
    def _state(cls, v):
        if v not in ("through", "crossed"):
            raise ValueError("state must be 'through' or 'crossed'")
        return v


class FloquetParams(_Params):
    omega_mod_hz: float = 80e6
    theta_rad: float = math.pi / 2
    k_max: int | None = None
    tau_s: float | None = None
    beta: float = 0.0
    tan_delta: float = 0.0
    f_center_hz: float = 6e9
    m_max: int | None = None
    amendment_phase_rad: float = 0.0
    export_matrix: bool = False

    @field_validator("k_max")
    @classmethod
    def _odd(cls, v):
        if v is not None and (v < 1 or v % 2 == 0):
            raise ValueError("k_max must be odd")
        return v

    def resolved_tau(self) -> float:
        if self.tau_s is not None:
            return self.tau_s
        return 1.0 / (4.0 * self.omega_mod_hz)


class FloquetSurfaceParams(_Params):
    omega_mod_hz: float = 80e6
    beta_values: list[float] = [0.0, 1e-4, 3e-4, 1e-3, 3e-3]
    k_max_values: list[int] = [1, 3, 5, 9, 15, 25, 49, 99]
    f_start_hz: float = 4e9
    f_stop_hz: float = 8e9
    f_points: int = 21
    m_max: int | None = None

    @field_validator("k_max_values")
    @classmethod
    def _odd_list(cls, v):
        if any(k < 1 or k % 2 == 0 for k in v):
            raise ValueError("k_max_values must all be odd")
        return v


class TransientParams(_Params):
    omega_mod_hz: float = 80e6
    tau_s: float | None = None
    sample_rate_hz: float = 163.84e9
    z0_ohm: float = 50.0
    matching_c_f: float = 270e-15
    n_cells: int = 46
    l0_total_h: float = 1.02e-9
    epsilon: float = 2.5e-2
    lg_total_h: float = 207e-12
    cj_f: float = 180e-15
    drive_kind: str = "fourier_truncated"
    harmonics: int = 25
    drive_port: int = 1
    tone_amplitude_sqrtw: float = 1.0
    f_start_hz: float = 4e9
    f_stop_hz: float = 8.5e9
    f_step_hz: float = 20e6
    spectrum_tone_hz: float = 6e9
    spectrum_port: int = 2
    settle_periods: int = 20
    window_periods: int = 16
    settle_rtol: float = 1e-4
    element_law: str = "flux"
    explicit_cells: bool = False
    export_waveforms: str = "none"

    @field_validator("drive_kind")
    @classmethod
    def _kind(cls, v):
        if v not in ("ideal_square", "fourier_truncated", "sigma_approximated"):
            raise ValueError(
                "drive_kind must be ideal_square | fourier_truncated | sigma_approximated"
            )
        return v

    @field_validator("element_law")
    @classmethod
    def _law(cls, v):
        if v not in ("flux", "didt"):
            raise ValueError("element_law must be 'flux' or 'didt'")
        return v

    @field_validator("export_waveforms")
    @classmethod
    def _exp(cls, v):
        if v not in ("none", "csv", "f64"):
            raise ValueError("export_waveforms must be none | csv | f64")
        return v

    def resolved_tau(self) -> float:
        if self.tau_s is not None:
            return self.tau_s
        return 1.0 / (4.0 * self.omega_mod_hz)


class OptimizeParams(_Params):
    f_start_hz: float = 10e6
    f_stop_hz: float = 1e9
    points: int = 41
    tan_delta: float = 1e-5
    dispersion_per_80mhz: float = 3e-4
    omega_b_hz: float = 2e9
    pitch_m: float = 60e-6
    band_lo_hz: float = 4e9
    band_hi_hz: float = 8e9
    band_average: bool = False


class NoiseParams(_Params):
    scenarios: list[str] = [
        "truncated_square_80mhz",
        "sigma_80mhz",
        "sigma_15mhz",
    ]
    asymmetry: float = 0.05
    cj_f: float = 180e-15
    q_factor: float = 3.5
    z0_ohm: float = 50.0
    i0_a: float = 9e-6
    amplitude_rad: float = math.pi / 4
    duration_periods: int = 64
    keep_periods: int = 32
    f_lo_hz: float = 4e9
    f_hi_hz: float = 8e9

    @field_validator("scenarios")
    @classmethod
    def _known(cls, v):
        known = {"truncated_square_80mhz", "sigma_80mhz", "sigma_15mhz"}
        bad = [s for s in v if s not in known]
        if bad:
            raise ValueError("unknown scenario(s) %s; known: %s" % (bad, sorted(known)))
        return v


_PARAM_MODELS = {
    Command.SWITCH_SWEEP: SwitchSweepParams,
    Command.FLOQUET: FloquetParams,
    Command.FLOQUET_SURFACE: FloquetSurfaceParams,
    Command.TRANSIENT: TransientParams,
    Command.OPTIMIZE: OptimizeParams,
    Command.NOISE: NoiseParams,
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)
    command: Command
    params: (
        SwitchSweepParams
        | FloquetParams
        | FloquetSurfaceParams
        | TransientParams
        | OptimizeParams
        | NoiseParams
    )
    output_dir: str = "circlab_out"
    defaults_applied: list[str] = []

    def resolved_params(self) -> dict:
        out = dict(self.params.model_dump())
        if isinstance(self.params, (FloquetParams, TransientParams)):
            out["tau_s_resolved"] = self.params.resolved_tau()
        return out


def _friendly_validation_error(err: ValidationError, known_fields) -> ConfigError:
    parts = []
    for item in err.errors():
        loc = ".".join(str(x) for x in item["loc"]) or "<document>"
        if item["type"] == "extra_forbidden":
            parts.append("unknown key '%s' (known keys: %s)" % (loc, ", ".join(sorted(known_fields))))
        else:
            parts.append(
                "key '%s' (expected unit: %s): %s" % (loc, expected_unit(loc), item["msg"])
            )
    return ConfigError("; ".join(parts))


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Validate a JSON config document into a RunConfig.

    When `command` is given (CLI positional) it fills or must agree with the
    document's own "command" key.  All unprovided keys are filled from the
    published defaults and recorded in defaults_applied.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config is not valid JSON: %s" % e) from e
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    doc = dict(doc)
    doc_command = doc.pop("command", None)
    output_dir = doc.pop("output_dir", "circlab_out")
    if command is not None and doc_command is not None and command != doc_command:
        raise ConfigError(
            "command mismatch: CLI says %r, config says %r" % (command, doc_command)
        )
    cmd_name = command or doc_command
    if cmd_name is None:
        raise ConfigError("no command given (CLI argument or 'command' key)")
    try:
        cmd = Command(cmd_name)
    except ValueError:
        raise ConfigError(
            "unknown command %r; expected one of %s"
            % (cmd_name, [c.value for c in Command])
        ) from None
    model = _PARAM_MODELS[cmd]
    try:
        params = model(**doc)
    except ValidationError as e:
        raise _friendly_validation_error(e, model.model_fields.keys()) from None
    defaults = sorted(set(model.model_fields.keys()) - set(doc.keys()))
    return RunConfig(
        command=cmd, params=params, output_dir=output_dir, defaults_applied=defaults
    )


def parse_config_file(path: str, command: str | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), command=command)
