"""Multi-sideband (Floquet) scattering of the switch-delay-switch network.

Sidebands at offsets m*Omega from the input tone are treated as extra ports.
The two switches act as Toeplitz mixing matrices over the sideband index,
the delay as a diagonal phase/attenuation matrix; the circulating-path
amplitudes are the m-indexed columns of the cascaded products.  For large
harmonic cutoffs the amplitudes are evaluated by direct vectorized sums
rather than matrix products, so the internal harmonic sum is not limited by
the output sideband window.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# reported in place of -inf when an amplitude underflows
DB_FLOOR = -200.0

# odd-harmonic cap standing in for an unbounded sum; r_0 tail < 4.1e-6
UNBOUNDED_K = 10**5

_K_CHUNK = 20000


class Waveform(enum.Enum):
    IDEAL_SQUARE = "ideal_square"
    FOURIER_TRUNCATED = "fourier_truncated"
    SIGMA_APPROXIMATED = "sigma_approximated"


class Direction(enum.Enum):
    RIGHT_GOING = "right_going"
    LEFT_GOING = "left_going"


@dataclass(frozen=True)
class ModulationProfile:
    """Switch modulation: rate Omega, relative phase theta, harmonic content."""

    omega_mod: float
    theta: float
    k_max: int | None = None
    waveform: Waveform = Waveform.IDEAL_SQUARE

    def __post_init__(self):
        if self.omega_mod <= 0:
            raise ValueError("omega_mod must be positive")
        if self.k_max is not None:
            if self.k_max < 1 or self.k_max % 2 == 0:
                raise ValueError("k_max must be a positive odd integer")
            if self.waveform is Waveform.IDEAL_SQUARE:
                raise ValueError("IdealSquare implies unbounded k_max")
        elif self.waveform is not Waveform.IDEAL_SQUARE:
            raise ValueError("finite k_max required for band-limited waveforms")

    @property
    def k_cap(self) -> int:
        return UNBOUNDED_K if self.k_max is None else self.k_max


@dataclass(frozen=True)
class DelayLineModel:
    """Delay line with linear-in-sideband dispersion and dielectric loss.

    Delay at sideband m is tau*(1 + beta*m); amplitude is
    exp(-(omega_center + m*Omega)*tau*tan_delta/2).
    """

    tau: float
    beta: float = 0.0
    tan_delta: float = 0.0
    omega_center: float = 2 * np.pi * 6e9

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.tan_delta < 0:
            raise ValueError("tan_delta must be non-negative")

    def sideband_delay(self, m):
        return self.tau * (1.0 + self.beta * np.asarray(m, float))

    def sideband_amplitude(self, m, omega_mod: float):
        w = self.omega_center + np.asarray(m, float) * omega_mod
        return np.exp(-w * self.tau * self.tan_delta / 2.0)


@dataclass(frozen=True)
class FloquetScatteringMatrix:
    """Complex amplitudes indexed (out_port, in_port, sideband m in -M..M)."""

    entries: np.ndarray
    m_max: int

    def entry(self, out_port: int, in_port: int, m: int) -> complex:
        return self.entries[out_port - 1, in_port - 1, m + self.m_max]

    def column_power(self, in_port: int) -> float:
        return float(np.sum(np.abs(self.entries[:, in_port - 1, :]) ** 2))

    def to_nested_lists(self):
        """[out][in][m] -> (re, im) pairs, m ascending from -m_max."""
        return [
            [
                [[float(z.real), float(z.imag)] for z in self.entries[o, i]]
                for i in range(4)
            ]
            for o in range(4)
        ]


def default_m_max(k_max: int | None) -> int:
    """Output-sideband half-width keeping the column-power truncation defect
    below ~1e-3 near the operating point."""
    if k_max is None:
        return 256
    return 4 * (int(np.ceil(k_max / 2)) + 4)


def harmonic_weight(n, profile: ModulationProfile):
    """Per-harmonic weight of the switch drive: hard cutoff for the
    truncated square, Lanczos sigma factors for the sigma approximation."""
    n = np.abs(np.asarray(n, float))
    odd = (n.astype(int) % 2) == 1
    if profile.waveform is Waveform.IDEAL_SQUARE:
        return np.where(odd, 1.0, 0.0)
    inside = odd & (n <= profile.k_max)
    if profile.waveform is Waveform.FOURIER_TRUNCATED:
        return np.where(inside, 1.0, 0.0)
    return np.where(inside, np.sinc(n / (profile.k_max + 1)), 0.0)


def switch_matrix(phase: float, k_max: int | None, m_max: int) -> np.ndarray:
    """Sideband-mixing matrix H of one switch: H_mn = 2 e^{j(m-n)phase} /
    (j pi (m-n)) for odd m-n, zero otherwise; entries beyond the harmonic
    cutoff are zeroed."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    m = np.arange(-m_max, m_max + 1)
    d = m[:, None] - m[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = 2.0 * np.exp(1j * d * phase) / (1j * np.pi * d)
    h[d % 2 == 0] = 0.0
    if k_max is not None:
        h[np.abs(d) > k_max] = 0.0
    return h


def delay_matrix(model: DelayLineModel, omega_mod: float, m_max: int) -> np.ndarray:
    """Diagonal sideband delay matrix D'_mm = a_m e^{j m Omega tau_m}."""
    m = np.arange(-m_max, m_max + 1)
    tau_m = model.sideband_delay(m)
    a_m = model.sideband_amplitude(m, omega_mod)
    return np.diag(a_m * np.exp(1j * m * omega_mod * tau_m))


def _transmission_sum(
    mod: ModulationProfile, delay: DelayLineModel, m_max: int, left_going: bool
) -> np.ndarray:
    """Direct k-sum of the cascaded odd-mode transmission for input at m=0.

    right-going m-th amplitude: -(4/pi^2) sum_k w_k w_{m-k} a_k
    e^{j k W tau_k} e^{j(m-k)theta} / ((m-k) k); left-going swaps the phase
    factor to e^{j k theta}.  Both switch weights are applied, matching the
    banded mixing matrices.
    """
    m = np.arange(-m_max, m_max + 1)
    out = np.zeros(2 * m_max + 1, complex)
    k_cap = mod.k_cap
    w = mod.omega_mod
    theta = mod.theta
    k_all = np.arange(1, k_cap + 1, 2)
    k_all = np.concatenate([-k_all[::-1], k_all])
    for lo in range(0, len(k_all), _K_CHUNK):
        k = k_all[lo : lo + _K_CHUNK]
        tau_k = delay.sideband_delay(k)
        a_k = delay.sideband_amplitude(k, w)
        wk = harmonic_weight(k, mod)
        if left_going:
            g = wk * a_k * np.exp(1j * k * (w * tau_k + theta)) / k
        else:
            g = wk * a_k * np.exp(1j * k * w * tau_k - 1j * k * theta) / k
        d = m[:, None] - k[None, :]
        mask = (d != 0) & ((np.abs(d) % 2) == 1) & (np.abs(d) <= k_cap)
        if mod.waveform is Waveform.SIGMA_APPROXIMATED:
            wmk = np.where(mask, np.sinc(np.abs(d) / (mod.k_max + 1)), 0.0)
        else:
            wmk = mask.astype(float)
        with np.errstate(divide="ignore"):
            kern = np.where(mask, wmk / np.where(d == 0, 1, d), 0.0)
        out += kern @ g
    phase_m = np.exp(1j * m * theta) if not left_going else np.ones_like(m, float)
    out *= -(4.0 / np.pi**2) * phase_m
    out[m % 2 != 0] = 0.0
    return out


def differential_transmission(
    mod: ModulationProfile,
    delay: DelayLineModel,
    direction: Direction,
    m_max: int | None = None,
) -> np.ndarray:
    """Sideband amplitudes r'_m (right-going) or l'_m (left-going) of the
    odd-mode cascade for a pure tone entering at m = 0."""
    if m_max is None:
        m_max = default_m_max(mod.k_max)
    return _transmission_sum(
        mod, delay, m_max, left_going=(direction is Direction.LEFT_GOING)
    )


def circulator_scattering(
    mod: ModulationProfile,
    delay: DelayLineModel,
    m_max: int | None = None,
    amendment_phase: float = 0.0,
) -> FloquetScatteringMatrix:
    """Full four-port x sideband scattering matrix of the circulator.

    The even-mode path is an ideal port swap concentrated at m = 0; the
    odd-mode path carries r'_m / l'_m.  With a finite harmonic cutoff the
    prompt-reflection amendment populates the diagonal and the
    port-1<->3 / 2<->4 entries with magnitudes sqrt(1 - |r_m|^2) and
    sqrt(1 - |l_m|^2); their common phase is physically undetermined and
    settable via amendment_phase.
    """
    if m_max is None:
        m_max = default_m_max(mod.k_max)
    r = differential_transmission(mod, delay, Direction.RIGHT_GOING, m_max)
    l = differential_transmission(mod, delay, Direction.LEFT_GOING, m_max)
    n = 2 * m_max + 1
    dlt = np.zeros(n)
    dlt[m_max] = 1.0
    s = np.zeros((4, 4, n), complex)
    s[1, 0] = (dlt - r) / 2
    s[3, 0] = (dlt + r) / 2
    s[0, 1] = (dlt - l) / 2
    s[2, 1] = (dlt + l) / 2
    s[1, 2] = (dlt + r) / 2
    s[3, 2] = (dlt - r) / 2
    s[0, 3] = (dlt + l) / 2
    s[2, 3] = (dlt - l) / 2
    if mod.k_max is not None:
        ph = np.exp(1j * amendment_phase)
        r_t = ph * np.sqrt(np.clip(1.0 - np.abs(r) ** 2, 0.0, None))
        l_t = ph * np.sqrt(np.clip(1.0 - np.abs(l) ** 2, 0.0, None))
        s[0, 0] = s[2, 2] = r_t / 2
        s[0, 2] = s[2, 0] = -r_t / 2
        s[1, 1] = s[3, 3] = l_t / 2
        s[1, 3] = s[3, 1] = -l_t / 2
    return FloquetScatteringMatrix(entries=s, m_max=m_max)


def _db(x: float) -> float:
    if x <= 10 ** (DB_FLOOR / 20):
        return DB_FLOOR
    return 20.0 * np.log10(x)


def metrics(s: FloquetScatteringMatrix) -> dict:
    """Port-1-column circulator metrics in dB.

    The circulating path is whichever of S21/S41 carries the larger m=0
    amplitude; the other is the reverse (isolation) path.
    """
    m0 = s.m_max
    s21 = s.entries[1, 0]
    s41 = s.entries[3, 0]
    if abs(s41[m0]) >= abs(s21[m0]):
        fwd, rev = s41, s21
    else:
        fwd, rev = s21, s41
    side = np.abs(fwd).copy()
    side[m0] = 0.0
    return {
        "insertion_loss_db": -_db(abs(fwd[m0])),
        "isolation_db": _db(abs(rev[m0])),
        "return_loss_db": _db(abs(s.entries[0, 0, m0])),
        "largest_sideband_db": _db(float(side.max())),
    }


def ideal_point_profile(
    omega_mod: float, k_max: int | None = None, theta: float = np.pi / 2
) -> tuple[ModulationProfile, DelayLineModel]:
    """Modulation/delay pair at the quarter-period operating point
    Omega*tau = pi/2."""
    wf = Waveform.IDEAL_SQUARE if k_max is None else Waveform.FOURIER_TRUNCATED
    mod = ModulationProfile(omega_mod=omega_mod, theta=theta, k_max=k_max, waveform=wf)
    return mod, DelayLineModel(tau=np.pi / (2 * omega_mod))


def dispersion_surface(
    betas,
    frequencies_hz,
    omega_mod: float = 2 * np.pi * 80e6,
    f_center_hz: float = 6e9,
    m_max: int | None = None,
):
    """Insertion loss / isolation over (dispersion, signal frequency).

    Group-delay dispersion makes the quarter-period tuning frequency
    dependent: at signal frequency f the line delay is
    tau0*(1 + beta*(f - f_center)/(Omega/2pi)), and the sideband delays
    fan out around it with the same beta.
    """
    tau0 = np.pi / (2 * omega_mod)
    rows = []
    for beta in betas:
        for f in frequencies_hz:
            tau_f = tau0 * (1.0 + beta * (f - f_center_hz) / (omega_mod / (2 * np.pi)))
            mod = ModulationProfile(omega_mod=omega_mod, theta=np.pi / 2)
            dl = DelayLineModel(tau=tau_f, beta=beta, omega_center=2 * np.pi * f)
            m = metrics(circulator_scattering(mod, dl, m_max=m_max))
            rows.append(
                {
                    "sweep_param": beta,
                    "frequency_hz": f,
                    "insertion_loss_db": m["insertion_loss_db"],
                    "isolation_db": m["isolation_db"],
                }
            )
    return rows


def bandwidth_surface(
    k_maxes,
    frequencies_hz,
    omega_mod: float = 2 * np.pi * 80e6,
    m_max: int | None = None,
):
    """Insertion loss / isolation over (harmonic cutoff, signal frequency);
    with ideal delays the frequency axis is flat by construction."""
    rows = []
    for k_max in k_maxes:
        mod, dl = ideal_point_profile(omega_mod, k_max=int(k_max))
        m = metrics(circulator_scattering(mod, dl, m_max=m_max))
        for f in frequencies_hz:
            rows.append(
                {
                    "sweep_param": int(k_max),
                    "frequency_hz": f,
                    "insertion_loss_db": m["insertion_loss_db"],
                    "isolation_db": m["isolation_db"],
                }
            )
    return rows
