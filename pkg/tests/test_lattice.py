import numpy as np
import pytest

from circlab import lattice
from circlab.lattice import (
    FIG2_PARAMS,
    DcSingularityError,
    LatticeSwitchParams,
    MatchConditionError,
    SwitchState,
    admittance_matrix,
    bode_fano_check,
    frequency_sweep,
    incidence_matrix,
    matched_capacitance,
    matched_inductance,
    scattering_first_order,
    scattering_matrix,
    with_state,
)


def stamped_admittance(lt, lc, c, omega):
    """Independent oracle: stamp each of the 8 chords directly."""
    y = np.zeros((4, 4), complex)
    for (i, k, l) in [(0, 1, lt), (0, 3, lc), (2, 1, lc), (2, 3, lt)]:
        g = 1.0 / (1j * omega * l)
        y[i, i] += g
        y[k, k] += g
        y[i, k] -= g
        y[k, i] -= g
    for i in range(4):
        y[i, i] += 1j * omega * c
    return y


def stamped_scattering(params, omega):
    lt, lc = params.arm_inductances()
    y = stamped_admittance(lt, lc, params.c, omega)
    return np.linalg.solve(np.eye(4) + params.z0 * y, np.eye(4) - params.z0 * y)


class TestIncidence:
    def test_shape_and_row_structure(self):
        a = incidence_matrix()
        assert a.shape == (8, 4)
        assert set(np.unique(a)) <= {-1, 0, 1}
        for row in a:
            assert np.sum(row == 1) <= 1 and np.sum(row == -1) <= 1


class TestAdmittance:
    def test_symmetric_for_any_valid_params(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = LatticeSwitchParams(
                l0=rng.uniform(0.1e-9, 5e-9),
                epsilon=rng.uniform(1e-3, 0.9),
                c=rng.uniform(50e-15, 500e-15),
                z0=rng.uniform(20, 100),
                state=SwitchState.CROSSED if rng.random() < 0.5 else SwitchState.THROUGH,
            )
            y = admittance_matrix(p, 2 * np.pi * rng.uniform(2e9, 10e9))
            assert np.abs(y - y.T).max() < 1e-16 * np.abs(y).max()

    def test_purely_imaginary_lossless(self):
        y = admittance_matrix(FIG2_PARAMS, 2 * np.pi * 6e9)
        assert np.abs(y.real).max() == 0.0

    def test_matches_stamping_oracle(self):
        w = 2 * np.pi * 6e9
        y = admittance_matrix(FIG2_PARAMS, w)
        lt, lc = FIG2_PARAMS.arm_inductances()
        np.testing.assert_allclose(y, stamped_admittance(lt, lc, FIG2_PARAMS.c, w), rtol=1e-14)
        # frozen oracle values at Fig. 2 crossed, 6 GHz
        assert y[0, 0] == pytest.approx(-0.0187456753820132j, rel=1e-12)
        assert y[0, 1] == pytest.approx(0.000705474038527905j, rel=1e-12)
        assert y[0, 3] == pytest.approx(0.0282189615411162j, rel=1e-12)

    def test_dc_singularity(self):
        with pytest.raises(DcSingularityError):
            admittance_matrix(FIG2_PARAMS, 0.0)


class TestScattering:
    def test_fig2_band_figures(self):
        freqs, s = frequency_sweep(FIG2_PARAMS, 4e9, 8e9, 401)
        il = -20 * np.log10(np.abs(s[:, 3, 0]))
        assert il.max() < 0.03
        assert 20 * np.log10(np.abs(s[:, 1, 0])).max() < -25
        assert 20 * np.log10(np.abs(s[:, 2, 0])).max() < -25
        assert 20 * np.log10(np.abs(s[:, 0, 0])).max() < -26

    def test_full_matrix_pinned_by_oracle(self):
        w = 2 * np.pi * 6e9
        s = scattering_matrix(FIG2_PARAMS, w).entries
        np.testing.assert_allclose(s, stamped_scattering(FIG2_PARAMS, w), atol=1e-14)
        assert s[0, 0] == pytest.approx(-0.0298865940695941 - 0.0254711083147326j, rel=1e-12)
        assert s[3, 0] == pytest.approx(0.66295153937097 - 0.746482901030562j, rel=1e-12)
        assert abs(s[3, 0]) == pytest.approx(0.998369403119578, rel=1e-12)

    def test_unitary_and_reciprocal(self):
        s = scattering_matrix(FIG2_PARAMS, 2 * np.pi * 5.3e9).entries
        assert np.abs(s.conj().T @ s - np.eye(4)).max() < 1e-10
        assert np.abs(s - s.T).max() < 1e-12

    def test_balanced_bridge_state_independent(self):
        p = LatticeSwitchParams(l0=1e-9, epsilon=1 - 1e-12, c=200e-15)
        w = 2 * np.pi * 6e9
        s_t = scattering_matrix(with_state(p, SwitchState.THROUGH), w).entries
        s_c = scattering_matrix(with_state(p, SwitchState.CROSSED), w).entries
        assert np.abs(s_t - s_c).max() < 1e-9

    def test_state_exchange_symmetry(self):
        w = 2 * np.pi * 5.1e9
        s_t = scattering_matrix(with_state(FIG2_PARAMS, SwitchState.THROUGH), w).entries
        s_c = scattering_matrix(with_state(FIG2_PARAMS, SwitchState.CROSSED), w).entries
        perm = np.eye(4)[[0, 3, 2, 1]]  # relabel ports 2 <-> 4
        assert np.abs(s_t - perm @ s_c @ perm).max() < 1e-12


class TestFirstOrder:
    def matched_params(self, omega, epsilon=2.5e-2):
        c = matched_capacitance(0.94e-9, 50.0, omega)
        return LatticeSwitchParams(
            l0=0.94e-9, epsilon=epsilon, c=c, z0=50.0, state=SwitchState.CROSSED
        )

    def test_forced_zero_at_corner_frequency(self):
        # x = tau_c * omega = 1: reflection and through-leak vanish, |S31| = eps
        c = 270e-15
        l0 = matched_inductance(c, 50.0, 1.0 / (50.0 * c))
        p = LatticeSwitchParams(l0=l0, epsilon=2.5e-2, c=c, state=SwitchState.CROSSED)
        w = 1.0 / (50.0 * c)
        s11, s21, s31, s41 = scattering_first_order(p, w)
        assert s11 == 0.0 and s21 == 0.0
        assert s31 == pytest.approx(2.5e-2, rel=1e-12)

    def test_match_violation_names_required_elements(self):
        with pytest.raises(MatchConditionError) as err:
            scattering_first_order(FIG2_PARAMS, 2 * np.pi * 6e9)
        msg = str(err.value)
        assert "l0 =" in msg and "c =" in msg

    def test_tracks_exact_when_matched(self):
        # enforce the match via l0 at fixed c so the 2-10 GHz sweep stays solvable
        eps = 2.5e-2
        c = 270e-15
        worst_small = 0.0
        worst_thru = 0.0
        for f in np.linspace(2e9, 10e9, 81):
            w = 2 * np.pi * f
            p = LatticeSwitchParams(
                l0=matched_inductance(c, 50.0, w), epsilon=eps, c=c, state=SwitchState.CROSSED
            )
            fo = scattering_first_order(p, w)
            s = scattering_matrix(p, w).entries
            ex = np.abs(s[:, 0])
            worst_small = max(worst_small, np.abs(ex[:3] - fo[:3]).max())
            worst_thru = max(worst_thru, abs(ex[3] - fo[3]))
        assert worst_small <= 5 * eps**2
        # the through-amplitude expansion carries its own ~8 eps^2 truncation error
        assert worst_thru <= 10 * eps**2

    def test_quadratic_scaling_of_deviation(self):
        c = 270e-15
        w = 2 * np.pi * 6e9
        l0 = matched_inductance(c, 50.0, w)
        epss = [1e-3, 3e-3, 1e-2]
        devs = []
        for eps in epss:
            p = LatticeSwitchParams(l0=l0, epsilon=eps, c=c, state=SwitchState.CROSSED)
            fo = scattering_first_order(p, w)
            ex = np.abs(scattering_matrix(p, w).entries[:, 0])
            devs.append(np.abs(ex - fo).max())
        slope = np.polyfit(np.log(epss), np.log(devs), 1)[0]
        assert abs(slope - 2.0) < 0.2

    def test_through_state_relabels_outputs(self):
        c = 270e-15
        w = 2 * np.pi * 6e9
        l0 = matched_inductance(c, 50.0, w)
        pc = LatticeSwitchParams(l0=l0, epsilon=2.5e-2, c=c, state=SwitchState.CROSSED)
        pt = with_state(pc, SwitchState.THROUGH)
        fc = scattering_first_order(pc, w)
        ft = scattering_first_order(pt, w)
        np.testing.assert_allclose(ft, fc[[0, 3, 2, 1]])


class TestBodeFano:
    def test_one_nanohenry_budget(self):
        out = bode_fano_check(1e-9, 50.0, -20.0, (0.0, 8e9))
        assert out["integral_lhs"] == pytest.approx(1.1574e11, rel=1e-3)
        assert out["bound_rhs"] == pytest.approx(1.5708e11, rel=1e-3)
        assert out["satisfied"]

    def test_unity_reflection_trivially_satisfied(self):
        out = bode_fano_check(1e-9, 50.0, 0.0, (0.0, 8e9))
        assert out["integral_lhs"] == 0.0
        assert out["satisfied"]

    def test_two_nanohenry_fails(self):
        assert not bode_fano_check(2e-9, 50.0, -20.0, (0.0, 8e9))["satisfied"]

    def test_exact_switch_integral_near_rl_bound(self):
        # the exact lattice lands within 10% of pi*Z0/l0 over 2-10 GHz
        # (slightly above it: the RL bound is approximate for this network)
        freqs, s = frequency_sweep(FIG2_PARAMS, 2e9, 10e9, 801)
        integral = np.trapezoid(-np.log(np.abs(s[:, 0, 0])), 2 * np.pi * freqs)
        bound = np.pi * FIG2_PARAMS.z0 / FIG2_PARAMS.l0
        assert 0.9 * bound < integral < 1.1 * bound


class TestValidation:
    def test_parameter_bounds(self):
        with pytest.raises(ValueError):
            LatticeSwitchParams(l0=-1e-9, epsilon=0.1, c=1e-13)
        with pytest.raises(ValueError):
            LatticeSwitchParams(l0=1e-9, epsilon=1.5, c=1e-13)

    def test_sweep_arguments(self):
        with pytest.raises(ValueError):
            frequency_sweep(FIG2_PARAMS, 5e9, 4e9)
