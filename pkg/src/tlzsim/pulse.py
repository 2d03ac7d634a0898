"""Rotating-frame waveform synthesis for the swept drive.

A sweep instance compiles to the three channels an IQ-modulated source
actually plays:

    f_R(t)    = sqrt(b_x^2 + b_y^2)            Rabi amplitude, Hz
    phi_mw(t) = -atan2(b_y, b_x), unwrapped    microwave phase, rad
    f_det(t)  = (1/t) * integral_0^t b_z dt'   detuning, Hz

so that b = (f_R cos phi, -f_R sin phi, d(f_det*t)/dt) reproduces the
model field.  The b_z channel is handled through the accumulated
product f_det*t (the phase divided by 2*pi), which has the closed form
(kappa*nu^2*F^2/6)*[(t-T/2)^3 + (T/2)^3]; differentiating the product
avoids the 0/0 at t = 0 that the quotient alone would hit.

Rectangular initialization/readout pulses are described by rotation
angles: the prep pulse rotates the reset pole onto the lower eigenstate
at q(0); the readout pulse is built so its inverse maps the reset pole
onto the lower eigenstate at q(T).  Pulse durations (130 ns rectangles
in the experiment this models) are hardware metadata; rotations are
applied as instantaneous in simulation, and amplitude miscalibration
enters as a linear scaling of the rotation angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .model import DriveParams, FieldVector, field_at
from .propagate import endpoint_states, propagate_sampled_field

# Relative headroom for limit checks: a Rabi-capped sweep overshoots
# f_r_max by (m/f_r_max)^2/2 because the gap rides on top of the
# saturated transverse amplitude; the duration formula ignores this.
CONSTRAINT_REL_TOL = 1e-3

# Computational-basis state the laser reset leaves the spin in (the
# -z pole in the Bloch picture used by the prep-angle formulas).
RESET_STATE = np.array([0.0, 1.0], dtype=complex)


class PrepAngles(NamedTuple):
    """Rectangular-pulse rotation angles for state prep and readout (rad)."""

    theta_i: float
    phi_i: float
    theta_f: float
    phi_f: float


class ConstraintCheck(NamedTuple):
    name: str
    limit: float
    observed_max: float
    passed: bool


@dataclass(frozen=True)
class PulseProgram:
    """Sampled drive waveforms plus prep angles and a constraint report.

    ``f_det`` is the per-sample quotient of ``det_product`` (= f_det*t)
    by t, with the t = 0 entry set to its limit b_z(0).
    """

    sample_rate: float
    t: np.ndarray
    f_r: np.ndarray
    phi_mw: np.ndarray
    f_det: np.ndarray
    det_product: np.ndarray
    prep: PrepAngles
    constraint_report: tuple[ConstraintCheck, ...]

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])


def _wrap_angle(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def accumulated_detuning_product(params: DriveParams, t: np.ndarray | float):
    """Closed-form f_det*t = integral_0^t b_z dt' in Hz*s."""
    T = params.duration
    coeff = params.kappa * params.nu**2 * params.F**2 / 6.0
    return coeff * ((t - T / 2.0) ** 3 + (T / 2.0) ** 3)


def prep_angles(params: DriveParams) -> PrepAngles:
    """Rotation angles preparing q(0) and reading out q(T).

    The readout phase is defined in the resonance-frequency rotating
    frame, hence the 2*pi*f_det(T)*T term re-aligning it with the sweep
    frame; both phases use the quadrant-correct two-argument arctangent
    and are normalized to (-pi, pi].
    """
    T = params.duration
    b0 = field_at(params, 0.0)
    bT = field_at(params, T)
    if b0.magnitude == 0.0 or bT.magnitude == 0.0:
        raise DomainError("degenerate endpoint field; prep angles undefined")
    theta_i = math.acos(b0.bz / b0.magnitude)
    phi_i = _wrap_angle(-(math.pi / 2.0 + math.atan2(b0.by, b0.bx)))
    theta_f = math.acos(bT.bz / bT.magnitude)
    det_phase = 2.0 * math.pi * accumulated_detuning_product(params, T)
    phi_f = _wrap_angle(det_phase - (-math.pi / 2.0 + math.atan2(bT.by, bT.bx)))
    return PrepAngles(theta_i, phi_i, theta_f, phi_f)


def readout_axis_phase(params: DriveParams) -> float:
    """Readout-pulse axis phase in the sweep frame (detuning term removed)."""
    bT = field_at(params, params.duration)
    return _wrap_angle(math.pi / 2.0 - math.atan2(bT.by, bT.bx))


def rotation_about_drive_axis(phi: float, theta: float) -> np.ndarray:
    """SU(2) rotation by theta about the equatorial axis (cos phi, -sin phi, 0).

    This is the rotation a resonant rectangular pulse of phase phi
    performs; theta is proportional to the pulse amplitude at fixed
    duration.
    """
    nx, ny = math.cos(phi), -math.sin(phi)
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    # cos(t/2) I - i sin(t/2) (n . sigma)
    return np.array(
        [
            [c, -1j * s * (nx - 1j * ny)],
            [-1j * s * (nx + 1j * ny), c],
        ],
        dtype=complex,
    )


def prepared_state(theta: float, phi: float) -> np.ndarray:
    """State produced by a prep pulse (theta, phi) acting on the reset pole."""
    return rotation_about_drive_axis(phi, theta) @ RESET_STATE


def survival_projector_state(theta: float, phi_frame: float) -> np.ndarray:
    """State whose squared overlap the readout measures (inverse readout
    rotation applied to the reset pole)."""
    return rotation_about_drive_axis(phi_frame, -theta) @ RESET_STATE


def _sample_grid(params: DriveParams, sample_rate: float) -> np.ndarray:
    T = params.duration
    if sample_rate < 100.0 / T:
        raise DomainError(
            f"sample_rate {sample_rate:.3g} Hz below 100 samples per sweep "
            f"({100.0 / T:.3g} Hz)"
        )
    n = int(round(sample_rate * T)) + 1
    # A gapless drive vanishes exactly at q = 0; keep that point out of
    # the grid so the phase stays defined at every sample.
    if params.m == 0.0 and n % 2 == 1:
        n += 1
    return np.linspace(0.0, T, n)


def synthesize_drive(params: DriveParams, sample_rate: float) -> PulseProgram:
    """Compile a sweep into sampled (f_R, phi_mw, f_det) waveforms.

    Constraint violations (e.g. a curvature-driven detuning exceeding
    the hardware maximum) are recorded in the constraint report rather
    than raised.
    """
    if params.F == 0.0:
        raise DomainError("waveform synthesis requires F != 0")
    t = _sample_grid(params, sample_rate)
    T = params.duration
    q = -params.F * (t - T / 2.0)
    bx = params.m
    by = params.nu * q
    bz0 = 0.5 * params.kappa * params.nu**2 * (params.F * T / 2.0) ** 2

    f_r = np.hypot(bx, by)
    phi_mw = np.unwrap(-np.arctan2(by, np.full_like(by, bx)))
    det_product = accumulated_detuning_product(params, t)
    f_det = np.empty_like(det_product)
    f_det[0] = bz0  # limit of product/t at t = 0
    f_det[1:] = det_product[1:] / t[1:]

    prog = PulseProgram(
        sample_rate=float(sample_rate),
        t=t,
        f_r=f_r,
        phi_mw=phi_mw,
        f_det=f_det,
        det_product=det_product,
        prep=prep_angles(params),
        constraint_report=(),
    )
    return replace(prog, constraint_report=tuple(verify_constraints(prog, params)))


def _product_derivative(t: np.ndarray, product: np.ndarray) -> np.ndarray:
    """d(f_det*t)/dt from samples; exact for cubic products on uniform grids."""
    n = len(t)
    if n < 2:
        raise DomainError("need at least two samples to differentiate")
    dt = np.diff(t)
    uniform = n >= 5 and np.allclose(dt, dt[0], rtol=1e-9, atol=0.0)
    if not uniform:
        return np.gradient(product, t)
    h = dt[0]
    y = product
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    d[0] = (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]) / (6.0 * h)
    d[1] = (-2.0 * y[0] - 3.0 * y[1] + 6.0 * y[2] - y[3]) / (6.0 * h)
    d[-2] = (2.0 * y[-1] + 3.0 * y[-2] - 6.0 * y[-3] + y[-4]) / (6.0 * h)
    d[-1] = (11.0 * y[-1] - 18.0 * y[-2] + 9.0 * y[-3] - 2.0 * y[-4]) / (6.0 * h)
    return d


def reconstruct_field_arrays(prog: PulseProgram) -> np.ndarray:
    """(N, 3) array of (b_x, b_y, b_z) implied by the stored waveforms."""
    if prog.n_samples < 2:
        raise DomainError("cannot reconstruct a field from fewer than two samples")
    if np.any(np.diff(prog.t) <= 0):
        raise DomainError("sample timestamps must be strictly increasing")
    bx = prog.f_r * np.cos(prog.phi_mw)
    by = -prog.f_r * np.sin(prog.phi_mw)
    bz = _product_derivative(prog.t, prog.det_product)
    return np.column_stack([bx, by, bz])


def reconstruct_field(prog: PulseProgram) -> list[FieldVector]:
    """Invert the waveform channels back into drive-field samples."""
    arr = reconstruct_field_arrays(prog)
    return [FieldVector(bx=float(r[0]), by=float(r[1]), bz=float(r[2])) for r in arr]


def verify_constraints(prog: PulseProgram, params: DriveParams) -> list[ConstraintCheck]:
    """Check the program against the hardware limits (report-only).

    The detuning channel is checked on the instantaneous frequency
    offset d(f_det*t)/dt, the quantity the duration limits actually cap.
    """
    checks = []
    obs_rabi = float(np.max(np.abs(prog.f_r)))
    obs_det = float(np.max(np.abs(_product_derivative(prog.t, prog.det_product))))
    obs_dur = prog.duration
    for name, limit, observed in (
        ("rabi_amplitude", params.f_r_max, obs_rabi),
        ("detuning", params.f_det_max, obs_det),
        ("duration", params.t_cap, obs_dur),
    ):
        checks.append(
            ConstraintCheck(
                name=name,
                limit=limit,
                observed_max=observed,
                passed=observed <= limit * (1.0 + CONSTRAINT_REL_TOL),
            )
        )
    return checks


def prep_rotation_error(prog: PulseProgram, alpha: float) -> PulseProgram:
    """Scale the prep/readout rotation angles by an amplitude factor alpha.

    Models a rectangular-pulse amplitude error at fixed pulse duration:
    the rotation angle is proportional to the amplitude, the axis phases
    are untouched.
    """
    if not (alpha > 0):
        raise DomainError(f"alpha must be > 0, got {alpha}")
    prep = prog.prep
    return replace(
        prog,
        prep=PrepAngles(
            theta_i=alpha * prep.theta_i,
            phi_i=prep.phi_i,
            theta_f=alpha * prep.theta_f,
            phi_f=prep.phi_f,
        ),
    )


def simulate_program(
    prog: PulseProgram,
    params: DriveParams,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
) -> float:
    """Tunneling probability from propagating the reconstructed waveform.

    The tabulated field is linearly interpolated between samples; the
    prep and projection states are the ideal model endpoints, so this
    measures how faithfully a sampled program reproduces the sweep.
    """
    fields = reconstruct_field_arrays(prog)
    initial, target = endpoint_states(params)
    psi_final, _, _ = propagate_sampled_field(
        prog.t, fields, initial, rel_tol=rel_tol, abs_tol=abs_tol
    )
    return float(abs(np.vdot(target, psi_final)) ** 2)


def write_waveform_csv(prog: PulseProgram, path, iq: bool = False) -> None:
    """Export the program as comma-separated text at full double precision.

    Default columns are ``t_s,f_R_Hz,phi_rad,f_det_Hz``; with ``iq`` the
    quadrature pair I = f_R cos(phi), Q = f_R sin(phi) replaces the
    amplitude/phase pair.
    """
    if iq:
        header = "t_s,I_Hz,Q_Hz,f_det_Hz"
        cols = (
            prog.t,
            prog.f_r * np.cos(prog.phi_mw),
            prog.f_r * np.sin(prog.phi_mw),
            prog.f_det,
        )
    else:
        header = "t_s,f_R_Hz,phi_rad,f_det_Hz"
        cols = (prog.t, prog.f_r, prog.phi_mw, prog.f_det)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in zip(*cols):
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write waveform to {path}: {exc}") from exc
