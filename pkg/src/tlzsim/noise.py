"""Quasi-static dephasing, amplitude-error injection, Rabi baseline.

Dephasing is modeled as a Gaussian-distributed resonance shift that is
constant within one sweep: the linewidth-averaged probability is

    P_lw = integral rho(f_s) P(f_s) df_s

with rho a normalized Gaussian (given by its FWHM) and P(f_s) the sweep
propagated with the shift added to b_z.  The integral is evaluated by
Gauss-Legendre quadrature on a truncated span with the Gaussian weights
renormalized over that span - deterministic, spectrally convergent, no
Monte Carlo noise.

Amplitude errors scale either the swept drive (b_y, b_z -> alpha*b_y,
alpha*b_z, leaving the perfect-tunneling speed invariant) or the
rectangular prep/readout pulses (rotation angles theta -> alpha*theta
about unchanged axes), or both.  The resonant-control baseline for
robustness comparisons is the Rabi flip probability (1 - cos(alpha*pi))/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .model import DriveParams
from .propagate import (
    PropagationOptions,
    evolve_state,
    propagate_sweep,
)
from .pulse import (
    prep_angles,
    prepared_state,
    readout_axis_phase,
    survival_projector_state,
)

CHANNELS = ("drive", "prep", "both")


@dataclass(frozen=True)
class DephasingModel:
    """Gaussian resonance-line model and quadrature settings.

    ``fwhm`` is the full width at half maximum of the resonance line in
    Hz; ``n_nodes`` Gauss-Legendre nodes cover ``span_sigmas`` standard
    deviations on each side.
    """

    fwhm: float
    n_nodes: int = 41
    span_sigmas: float = 4.0

    def __post_init__(self):
        if self.fwhm < 0:
            raise DomainError(f"fwhm must be >= 0, got {self.fwhm}")
        if self.n_nodes < 11 or self.n_nodes % 2 == 0:
            raise DomainError(f"n_nodes must be odd and >= 11, got {self.n_nodes}")
        if self.span_sigmas < 3:
            raise DomainError(f"span_sigmas must be >= 3, got {self.span_sigmas}")

    @property
    def sigma(self) -> float:
        return self.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class RobustnessInterval:
    """Maximal contiguous amplitude-error interval meeting a threshold.

    ``alpha_lo``/``alpha_hi`` are None when the error-free point already
    fails the threshold (the empty-interval signal).
    """

    method: str
    threshold: float
    alpha_lo: float | None
    alpha_hi: float | None

    @property
    def empty(self) -> bool:
        return self.alpha_lo is None

    @property
    def width(self) -> float:
        if self.empty:
            return 0.0
        return self.alpha_hi - self.alpha_lo


def _with_duration(params: DriveParams) -> DriveParams:
    return params.with_duration() if params.T is None else params


def shifted_probability(
    params: DriveParams, f_shift: float, options: PropagationOptions | None = None
) -> float:
    """Tunneling probability with a static resonance shift on b_z."""
    base = options or PropagationOptions()
    opts = PropagationOptions(
        rel_tol=base.rel_tol,
        abs_tol=base.abs_tol,
        max_step=base.max_step,
        bz_offset=f_shift,
        drive_amp_scale=base.drive_amp_scale,
    )
    return propagate_sweep(_with_duration(params), opts).p


def dephasing_nodes(model: DephasingModel) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes (Hz) and renormalized Gaussian weights."""
    x, w = np.polynomial.legendre.leggauss(model.n_nodes)
    span = model.span_sigmas * model.sigma
    nodes = span * x
    weights = w * np.exp(-(nodes**2) / (2.0 * model.sigma**2))
    weights /= weights.sum()
    return nodes, weights


def dephased_probability(
    params: DriveParams,
    model: DephasingModel,
    options: PropagationOptions | None = None,
) -> float:
    """Linewidth-averaged tunneling probability.

    A zero-width line is the delta-function limit and returns the
    unshifted sweep probability exactly.
    """
    if model.fwhm == 0.0:
        return shifted_probability(params, 0.0, options)
    nodes, weights = dephasing_nodes(model)
    probs = np.array([shifted_probability(params, f, options) for f in nodes])
    return float(np.dot(weights, probs))


def rabi_probability(alpha: float) -> float:
    """Resonant-control flip probability (1 - cos(alpha*pi))/2.

    alpha = 1 is a perfect pi pulse; the angle scales linearly with the
    drive amplitude.
    """
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    return 0.5 * (1.0 - math.cos(alpha * math.pi))


def amplitude_error_probability(
    params: DriveParams,
    alpha: float,
    channel: str = "drive",
    options: PropagationOptions | None = None,
) -> float:
    """Tunneling probability with a +/- amplitude error on one channel.

    ``drive`` scales b_y and b_z during the sweep with ideal prep and
    projection; ``prep`` scales the rectangular-pulse rotation angles so
    the initial state and the measured projection direction tilt away
    from the eigenstates; ``both`` applies the two together.
    """
    if not (alpha > 0):
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if channel not in CHANNELS:
        raise DomainError(f"channel must be one of {CHANNELS}, got {channel!r}")
    params = _with_duration(params)
    base = options or PropagationOptions()

    drive_scale = alpha if channel in ("drive", "both") else 1.0
    opts = PropagationOptions(
        rel_tol=base.rel_tol,
        abs_tol=base.abs_tol,
        max_step=base.max_step,
        bz_offset=base.bz_offset,
        drive_amp_scale=drive_scale,
    )

    if channel == "drive":
        return propagate_sweep(params, opts).p

    # Prep-channel error: evolve the tilted prepared state and measure
    # survival through the tilted readout rotation; the tunneling
    # probability is its complement.  At alpha = 1 this reduces exactly
    # to the eigenstate-projected probability.
    angles = prep_angles(params)
    phi_frame = readout_axis_phase(params)
    psi0 = prepared_state(alpha * angles.theta_i, angles.phi_i)
    proj = survival_projector_state(alpha * angles.theta_f, phi_frame)
    psi_final, _, _ = evolve_state(params, psi0, opts)
    return float(1.0 - abs(np.vdot(proj, psi_final)) ** 2)


def robustness_interval(
    probability_of_alpha: Callable[[float], float],
    threshold: float,
    alphas: np.ndarray,
    method: str = "tlz",
    refine_tol: float = 1e-3,
) -> RobustnessInterval:
    """Maximal contiguous alpha-interval around 1 meeting the threshold.

    The coarse grid locates the contiguous region containing alpha = 1
    where the probability stays >= threshold; each endpoint is then
    refined by bisection to ``refine_tol``.  Endpoints that reach the
    grid edge are reported at the edge.
    """
    if not (0.0 < threshold < 1.0):
        raise DomainError(f"threshold must be in (0, 1), got {threshold}")
    alphas = np.asarray(alphas, dtype=float)
    if len(alphas) < 3 or np.any(np.diff(alphas) <= 0):
        raise DomainError("alpha grid must be increasing with >= 3 points")
    if not (alphas[0] <= 1.0 <= alphas[-1]):
        raise DomainError("alpha grid must span the error-free point alpha = 1")

    p_one = probability_of_alpha(1.0)
    if p_one < threshold:
        return RobustnessInterval(method, threshold, None, None)

    probs = np.array([probability_of_alpha(a) for a in alphas])
    i_one = int(np.argmin(np.abs(alphas - 1.0)))
    ok = probs >= threshold
    # Anchor on the grid point nearest alpha=1; if grid sampling missed
    # it (possible only for pathological grids) fall back to alpha=1.
    if not ok[i_one]:
        lo = hi = 1.0
        lo_in, hi_in = 1.0, 1.0
        lo_out = alphas[i_one - 1] if i_one > 0 else None
        hi_out = alphas[i_one + 1] if i_one < len(alphas) - 1 else None
    else:
        i_lo = i_one
        while i_lo > 0 and ok[i_lo - 1]:
            i_lo -= 1
        i_hi = i_one
        while i_hi < len(alphas) - 1 and ok[i_hi + 1]:
            i_hi += 1
        lo_in, hi_in = alphas[i_lo], alphas[i_hi]
        lo_out = alphas[i_lo - 1] if i_lo > 0 else None
        hi_out = alphas[i_hi + 1] if i_hi < len(alphas) - 1 else None

    def bisect(a_in: float, a_out: float) -> float:
        # invariant: p(a_in) >= threshold > p(a_out)
        while abs(a_out - a_in) > refine_tol:
            mid = 0.5 * (a_in + a_out)
            if probability_of_alpha(mid) >= threshold:
                a_in = mid
            else:
                a_out = mid
        return a_in

    alpha_lo = alphas[0] if lo_out is None else bisect(lo_in, lo_out)
    alpha_hi = alphas[-1] if hi_out is None else bisect(hi_in, hi_out)
    return RobustnessInterval(method, threshold, float(alpha_lo), float(alpha_hi))


def rabi_robustness_interval(
    threshold: float,
    alpha_lo: float = 0.5,
    alpha_hi: float = 4.0,
    n_grid: int = 71,
    refine_tol: float = 1e-3,
) -> RobustnessInterval:
    """Robustness interval of the resonant Rabi control."""
    return robustness_interval(
        rabi_probability,
        threshold,
        np.linspace(alpha_lo, alpha_hi, n_grid),
        method="rabi",
        refine_tol=refine_tol,
    )


def drive_robustness_interval(
    params: DriveParams,
    threshold: float,
    alpha_lo: float = 0.5,
    alpha_hi: float = 4.0,
    n_grid: int = 36,
    refine_tol: float = 1e-3,
    options: PropagationOptions | None = None,
) -> RobustnessInterval:
    """Robustness interval of the swept drive against amplitude error.

    ``params.F`` should already be the speed maximizing the error-free
    probability (located with the numeric perfect-tunneling search when
    reproducing the comparison figures).
    """
    params = _with_duration(params)

    def prob(alpha: float) -> float:
        return amplitude_error_probability(params, alpha, "drive", options)

    return robustness_interval(
        prob,
        threshold,
        np.linspace(alpha_lo, alpha_hi, n_grid),
        method="tlz",
        refine_tol=refine_tol,
    )
