import math

import mpmath as mp
import numpy as np
import pytest

from tlzsim import (
    DomainError,
    DriveParams,
    field_at,
    instantaneous_eigensystem,
    prep_angles,
    prep_rotation_error,
    reconstruct_field,
    simulate_program,
    synthesize_drive,
    tunneling_probability,
    verify_constraints,
    write_waveform_csv,
)
from tlzsim.pulse import (
    accumulated_detuning_product,
    prepared_state,
    readout_axis_phase,
    reconstruct_field_arrays,
    survival_projector_state,
)

mp.mp.dps = 40


def detuning_product_oracle(params, t) -> float:
    """Symbolic integral of the quadratic channel at arbitrary precision."""
    kappa, nu, F, T = (mp.mpf(x) for x in (params.kappa, params.nu, params.F, params.T))
    t = mp.mpf(t)
    return float(kappa * nu**2 * F**2 / 6 * ((t - T / 2) ** 3 + (T / 2) ** 3))


class TestSynthesize:
    def test_midpoint_channel_values(self, fig2_params):
        # odd sample count puts one sample exactly at the gap minimum
        prog = synthesize_drive(fig2_params, 1000.0 / fig2_params.T)
        mid = prog.n_samples // 2
        assert prog.t[mid] == pytest.approx(fig2_params.T / 2, rel=1e-12)
        assert prog.f_r[mid] == pytest.approx(fig2_params.m, rel=1e-9)
        assert prog.phi_mw[mid] == pytest.approx(0.0, abs=1e-9)
        bz = reconstruct_field_arrays(prog)[mid, 2]
        assert bz == pytest.approx(0.0, abs=1.0)

    def test_initial_rabi_amplitude(self):
        params = DriveParams(m=0.5e6, nu=1e14, kappa=0.2e-6, F=-0.3142, T=0.866e-6)
        prog = synthesize_drive(params, 1e9)
        # hand value: sqrt(m^2 + (nu*F*T/2)^2)
        assert prog.f_r[0] == pytest.approx(13614044.792771912, rel=1e-12)

    def test_detuning_product_closed_form(self, fig2_params):
        prog = synthesize_drive(fig2_params, 1e9)
        golden = 5.3372713770422236  # arbitrary-precision integral at t = T
        assert prog.det_product[-1] == pytest.approx(golden, rel=1e-12)
        assert prog.det_product[-1] == pytest.approx(
            detuning_product_oracle(fig2_params, fig2_params.T), rel=1e-12
        )

    def test_detuning_product_starts_at_zero(self, fig2_params):
        prog = synthesize_drive(fig2_params, 1e9)
        assert prog.det_product[0] == 0.0
        b0 = field_at(fig2_params, 0.0)
        assert prog.f_det[0] == pytest.approx(b0.bz, rel=1e-12)

    def test_rabi_amplitude_nonnegative_and_phase_continuous(self, fig2_params):
        prog = synthesize_drive(fig2_params, 1000.0 / fig2_params.T)
        assert np.all(prog.f_r >= 0)
        assert np.max(np.abs(np.diff(prog.phi_mw))) < math.pi

    def test_gapless_grid_avoids_midpoint(self):
        params = DriveParams(m=0.0, nu=1e14, kappa=2.5e-6, F=0.05).with_duration()
        prog = synthesize_drive(params, 1000.0 / params.T)
        assert prog.n_samples % 2 == 0
        assert np.all(np.abs(prog.t - params.T / 2) > 1e-12)
        assert np.all(np.isfinite(prog.phi_mw))

    def test_sample_rate_floor(self, fig2_params):
        with pytest.raises(DomainError):
            synthesize_drive(fig2_params, 50.0 / fig2_params.T)


class TestReconstruct:
    def test_round_trip_matches_model_field(self, fig2_params):
        prog = synthesize_drive(fig2_params, 1e9)
        fields = reconstruct_field_arrays(prog)
        reference = np.array(
            [field_at(fig2_params, float(t)).as_array() for t in prog.t]
        )
        scale = np.abs(reference).max(axis=0)
        err = np.abs(fields - reference) / scale
        assert err.max() <= 1e-6

    def test_round_trip_error_does_not_grow_at_lower_rate(self, fig2_params):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        fields = reconstruct_field_arrays(prog)
        reference = np.array(
            [field_at(fig2_params, float(t)).as_array() for t in prog.t]
        )
        scale = np.abs(reference).max(axis=0)
        assert (np.abs(fields - reference) / scale).max() <= 1e-6

    def test_untwisted_detuning_channel_is_silent(self):
        params = DriveParams(m=0.5e6, nu=1e14, kappa=0.0, F=0.3).with_duration()
        prog = synthesize_drive(params, 1e4 / params.T)
        bz = reconstruct_field_arrays(prog)[:, 2]
        assert np.abs(bz).max() <= 1.0

    def test_returns_field_vectors(self, fig2_params):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        fields = reconstruct_field(prog)
        assert len(fields) == prog.n_samples
        assert fields[0].bx == pytest.approx(fig2_params.m, rel=1e-9)

    def test_single_sample_rejected(self, fig2_params):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        broken = type(prog)(
            sample_rate=prog.sample_rate,
            t=prog.t[:1],
            f_r=prog.f_r[:1],
            phi_mw=prog.phi_mw[:1],
            f_det=prog.f_det[:1],
            det_product=prog.det_product[:1],
            prep=prog.prep,
            constraint_report=prog.constraint_report,
        )
        with pytest.raises(DomainError):
            reconstruct_field(broken)

    def test_non_monotone_timestamps_rejected(self, fig2_params):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        t = prog.t.copy()
        t[3], t[4] = t[4], t[3]
        broken = type(prog)(
            sample_rate=prog.sample_rate,
            t=t,
            f_r=prog.f_r,
            phi_mw=prog.phi_mw,
            f_det=prog.f_det,
            det_product=prog.det_product,
            prep=prog.prep,
            constraint_report=prog.constraint_report,
        )
        with pytest.raises(DomainError):
            reconstruct_field(broken)


class TestConstraints:
    def test_rabi_limited_program_saturates_and_passes(self, fig2_params):
        # duration picked by the Rabi limit: the transverse amplitude
        # hits f_r_max at the endpoints, the gap adds < 0.1% on top
        prog = synthesize_drive(fig2_params, 1e3 / fig2_params.T)
        report = {c.name: c for c in prog.constraint_report}
        rabi = report["rabi_amplitude"]
        assert rabi.observed_max == pytest.approx(fig2_params.f_r_max, rel=1e-3)
        assert rabi.observed_max > fig2_params.f_r_max
        assert rabi.passed
        assert report["detuning"].passed
        assert report["duration"].passed

    def test_untwisted_detuning_check_trivially_passes(self):
        params = DriveParams(m=0.5e6, nu=1e14, kappa=0.0, F=0.3).with_duration()
        prog = synthesize_drive(params, 1e3 / params.T)
        det = {c.name: c for c in prog.constraint_report}["detuning"]
        assert det.observed_max <= 1.0
        assert det.passed

    def test_overlong_sweep_fails_a_check(self, fig2_params):
        stretched = DriveParams(
            m=fig2_params.m,
            nu=fig2_params.nu,
            kappa=fig2_params.kappa,
            F=fig2_params.F,
            T=2 * fig2_params.T,
        )
        prog = synthesize_drive(stretched, 1e3 / stretched.T)
        assert not all(c.passed for c in prog.constraint_report)

    def test_verify_is_pure_report(self, fig2_params):
        prog = synthesize_drive(fig2_params, 1e3 / fig2_params.T)
        report = verify_constraints(prog, fig2_params)
        assert [c.name for c in report] == ["rabi_amplitude", "detuning", "duration"]


class TestPrep:
    def test_prep_pulse_reaches_initial_eigenstate(self, fig2_params):
        angles = prep_angles(fig2_params)
        psi = prepared_state(angles.theta_i, angles.phi_i)
        target = instantaneous_eigensystem(field_at(fig2_params, 0.0)).v1
        assert abs(np.vdot(target, psi)) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_readout_projector_is_final_lower_state(self, fig2_params):
        angles = prep_angles(fig2_params)
        proj = survival_projector_state(angles.theta_f, readout_axis_phase(fig2_params))
        target = instantaneous_eigensystem(field_at(fig2_params, fig2_params.T)).v1
        assert abs(np.vdot(target, proj)) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_polar_angles_from_field(self, fig2_params):
        angles = prep_angles(fig2_params)
        b0 = field_at(fig2_params, 0.0)
        assert angles.theta_i == pytest.approx(math.acos(b0.bz / b0.magnitude))
        bT = field_at(fig2_params, fig2_params.T)
        assert angles.theta_f == pytest.approx(math.acos(bT.bz / bT.magnitude))
        for phi in (angles.phi_i, angles.phi_f):
            assert -math.pi < phi <= math.pi

    def test_rotation_error_scales_angles_only(self, fig2_params):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        same = prep_rotation_error(prog, 1.0)
        assert same.prep == prog.prep
        worse = prep_rotation_error(prog, 1.05)
        assert worse.prep.theta_i == pytest.approx(1.05 * prog.prep.theta_i)
        assert worse.prep.theta_f == pytest.approx(1.05 * prog.prep.theta_f)
        assert worse.prep.phi_i == prog.prep.phi_i
        assert worse.prep.phi_f == prog.prep.phi_f
        doubled = prep_rotation_error(prog, 2.0)
        assert doubled.prep.theta_i == pytest.approx(2 * prog.prep.theta_i)
        with pytest.raises(DomainError):
            prep_rotation_error(prog, 0.0)


class TestSimulateProgram:
    def test_waveform_drive_reproduces_sweep(self, fig2_params):
        prog = synthesize_drive(fig2_params, 1e4 / fig2_params.T)
        p_model = tunneling_probability(fig2_params)
        assert simulate_program(prog, fig2_params) == pytest.approx(p_model, abs=1e-4)


class TestExport:
    def test_amplitude_phase_columns(self, fig2_params, tmp_path):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        path = tmp_path / "waveform.csv"
        write_waveform_csv(prog, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_s,f_R_Hz,phi_rad,f_det_Hz"
        assert len(lines) == prog.n_samples + 1
        values = [float(v) for v in lines[1].split(",")]
        assert values == [prog.t[0], prog.f_r[0], prog.phi_mw[0], prog.f_det[0]]

    def test_iq_columns(self, fig2_params, tmp_path):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        path = tmp_path / "waveform_iq.csv"
        write_waveform_csv(prog, path, iq=True)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_s,I_Hz,Q_Hz,f_det_Hz"
        _, i_val, q_val, _ = (float(v) for v in lines[1].split(","))
        assert i_val == pytest.approx(prog.f_r[0] * math.cos(prog.phi_mw[0]), rel=1e-15)
        assert q_val == pytest.approx(prog.f_r[0] * math.sin(prog.phi_mw[0]), rel=1e-15)

    def test_full_precision_round_trip(self, fig2_params, tmp_path):
        prog = synthesize_drive(fig2_params, 200.0 / fig2_params.T)
        path = tmp_path / "waveform.csv"
        write_waveform_csv(prog, path)
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.array_equal(rows[:, 0], prog.t)
        assert np.array_equal(rows[:, 1], prog.f_r)
