"""Core model: drive parameters, swept field, duration limits, eigensystem.

Everything in this package works in MKS-flavoured frequency units:
the gap parameter ``m`` is in Hz, the energy slope ``nu`` in Hz^2, the
geodesic curvature ``kappa`` in seconds, times in seconds.  The drive
field seen by the spin-1/2 in the rotating frame is

    b(q) = (m, nu*q, 0.5*kappa*nu^2*q^2)          [all components in Hz]

with the sweep coordinate q = -F*(t - T/2) running over t in [0, T] at
the dimensionless signed speed F.  The Hamiltonian is 2*pi * b . S with
S the spin-1/2 operators, so instantaneous energies are +-|b|/2 in Hz.

The often-quoted natural-units form (Pauli matrices, hbar = 1) maps onto
this convention via m -> pi*m, nu -> pi*nu, kappa -> kappa/pi; it is
never stored or used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateFieldError, DomainError

# Component magnitude below which the leading eigenvector entry is
# considered zero and the gauge fix switches to the second entry.
GAUGE_SWITCH_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DriveParams:
    """One instance of the quadratically twisted sweep model.

    Parameters
    ----------
    m : float
        Gap parameter (Hz), half the minimum level splitting.  m >= 0.
    nu : float
        Energy-slope parameter (Hz^2), strictly positive.
    kappa : float
        Geodesic curvature of the field path (s); sign sets the twist
        handedness, 0 recovers the plain Landau-Zener model.
    F : float
        Dimensionless signed sweep speed.  Any finite value is allowed
        for field evaluation; propagation additionally requires F != 0.
    T : float or None
        Sweep duration (s).  ``None`` means "not chosen yet"; helpers
        such as :func:`sweep_duration` / :meth:`with_duration` fill it.
    f_r_max : float
        Maximum available Rabi frequency (Hz).
    f_det_max : float
        Maximum available detuning (Hz).
    t_cap : float
        Hard cap on the sweep duration (s).
    """

    m: float
    nu: float
    kappa: float
    F: float
    T: float | None = None
    f_r_max: float = 13.6e6
    f_det_max: float = 50.0e6
    t_cap: float = 10.0e-6

    def __post_init__(self):
        if not (self.nu > 0):
            raise DomainError(f"nu must be > 0, got {self.nu}")
        if self.m < 0:
            raise DomainError(f"m must be >= 0, got {self.m}")
        if not math.isfinite(self.F):
            raise DomainError(f"F must be finite, got {self.F}")
        if self.T is not None and not (self.T > 0):
            raise DomainError(f"T must be > 0 when set, got {self.T}")
        for name in ("f_r_max", "f_det_max", "t_cap"):
            if not (getattr(self, name) > 0):
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def duration(self) -> float:
        """The stored sweep duration; raises if it has not been chosen."""
        if self.T is None:
            raise DomainError("sweep duration T is not set; call with_duration()")
        return self.T

    def with_duration(self, T: float | None = None) -> "DriveParams":
        """Return a copy with T set (defaults to :func:`sweep_duration`)."""
        return replace(self, T=sweep_duration(self) if T is None else T)


@dataclass(frozen=True)
class FieldVector:
    """Instantaneous drive field components, each in Hz."""

    bx: float
    by: float
    bz: float

    def __post_init__(self):
        for c in (self.bx, self.by, self.bz):
            if not math.isfinite(c):
                raise DomainError(f"field components must be finite, got {self}")

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.bx**2 + self.by**2 + self.bz**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.bx, self.by, self.bz])


@dataclass(frozen=True)
class EigenSystem:
    """Instantaneous eigenpairs of the two-level Hamiltonian.

    ``e1 <= e2`` (Hz); ``v1``/``v2`` are the corresponding normalized
    amplitude pairs under the package gauge fix (leading component real
    and non-negative, falling back to the second component when the
    first is smaller than ``GAUGE_SWITCH_THRESHOLD`` in magnitude).
    """

    e1: float
    e2: float
    v1: np.ndarray
    v2: np.ndarray


def sweep_coordinate(params: DriveParams, t: float) -> float:
    """q(t) = -F*(t - T/2) in seconds."""
    return -params.F * (t - params.duration / 2.0)


def field_at_coordinate(params: DriveParams, q: float) -> FieldVector:
    """Drive field at sweep coordinate q (does not need T or F)."""
    return FieldVector(
        bx=params.m,
        by=params.nu * q,
        bz=0.5 * params.kappa * params.nu**2 * q**2,
    )


def field_at(params: DriveParams, t: float) -> FieldVector:
    """Drive field at lab time t in [0, T].

    Raises
    ------
    DomainError
        If t lies outside the sweep window.
    """
    T = params.duration
    if not (0.0 <= t <= T):
        raise DomainError(f"t = {t} outside sweep window [0, {T}]")
    return field_at_coordinate(params, sweep_coordinate(params, t))


def sweep_duration(params: DriveParams) -> float:
    """Longest usable sweep duration under the hardware limits.

    Returns min(t_cap, T_R, T_det) with

        T_R   = 2 * f_r_max / (nu * |F|)                      (Rabi cap)
        T_det = 2 * sqrt(2 * f_det_max / |kappa|) / (nu * |F|)  (detuning cap)

    T_R caps the endpoint transverse amplitude nu*|F|*T/2 at f_r_max;
    T_det caps the endpoint quadratic component kappa*nu^2*(F*T/2)^2/2
    at f_det_max.  kappa = 0 means no detuning is ever needed, so T_det
    is +inf and only the other two limits apply.
    """
    if params.F == 0.0:
        raise DomainError("F = 0 gives an infinite sweep duration")
    nu_f = params.nu * abs(params.F)
    t_rabi = 2.0 * params.f_r_max / nu_f
    if params.kappa == 0.0:
        t_det = math.inf
    else:
        t_det = 2.0 * math.sqrt(2.0 * params.f_det_max / abs(params.kappa)) / nu_f
    return min(params.t_cap, t_rabi, t_det)


def hamiltonian_matrix(b: FieldVector) -> np.ndarray:
    """b . S as a 2x2 complex matrix in Hz (multiply by 2*pi for rad/s)."""
    return 0.5 * np.array(
        [
            [b.bz, b.bx - 1j * b.by],
            [b.bx + 1j * b.by, -b.bz],
        ],
        dtype=complex,
    )


def _gauge_fix(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the leading component is real and >= 0."""
    pivot = v[0] if abs(v[0]) >= GAUGE_SWITCH_THRESHOLD else v[1]
    return v * (pivot.conjugate() / abs(pivot))


def instantaneous_eigensystem(b: FieldVector) -> EigenSystem:
    """Eigen-decomposition of b . S with the deterministic gauge fix.

    Energies are e2 = -e1 = |b|/2 in Hz; v1 is the lower state.

    Raises
    ------
    DegenerateFieldError
        If |b| = 0 (the eigenbasis is undefined at the degeneracy).
    """
    if b.magnitude == 0.0:
        raise DegenerateFieldError("drive field is zero; eigenbasis undefined")
    w, v = np.linalg.eigh(hamiltonian_matrix(b))
    return EigenSystem(
        e1=float(w[0]),
        e2=float(w[1]),
        v1=_gauge_fix(v[:, 0].copy()),
        v2=_gauge_fix(v[:, 1].copy()),
    )
