"""Closed-form tunneling formulas, perfect-tunneling speeds, geometry.

The twisted transition probability used throughout is

    P = exp[ -(pi^2 / (nu*|F|)) * (m + F*nu*kappa/(4*pi))^2 ]

whose effective gap closes at the perfect-tunneling speed
F_PT = -4*pi*m/(nu*kappa).  kappa = 0 reduces to the plain Landau-Zener
exponential exp(-pi^2*m^2/(nu*|F|)).  The geometric origin of the gap
shift is the gauge-invariant combination

    R12(q) = -A11(q) + A22(q) + d/dq arg A12(q),
    A_nl(q) = <n(q)| i d/dq |l(q)>,

which equals nu*kappa at q = 0 for this model; it is evaluated here by
central finite differences over the gauge-fixed eigenvectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import BracketBoundaryError, DomainError
from .model import (
    DriveParams,
    field_at_coordinate,
    instantaneous_eigensystem,
    sweep_duration,
)
from .propagate import PropagationOptions, propagate_sweep


@dataclass(frozen=True)
class PtCondition:
    """A perfect-tunneling speed and the probability achieved there."""

    f_pt: float
    kind: str  # "analytic" | "numeric"
    p_at_pt: float


def lz_probability(m: float, nu: float, F: float) -> float:
    """Landau-Zener tunneling probability exp(-pi^2*m^2/(nu*|F|)).

    F = 0 is the adiabatic limit: 0 for a finite gap, 1 for m = 0.
    These are limit conventions, not sweep results (a sweep at F = 0
    would take infinite time).
    """
    if nu <= 0:
        raise DomainError(f"nu must be > 0, got {nu}")
    if F == 0.0:
        return 1.0 if m == 0.0 else 0.0
    return math.exp(-(math.pi**2) * m**2 / (nu * abs(F)))


def tlz_probability(m: float, nu: float, kappa: float, F: float) -> float:
    """Twisted tunneling probability with the geometrically shifted gap.

    Equals :func:`lz_probability` for kappa = 0 and reaches exactly 1 at
    the perfect-tunneling speed, where the effective gap
    m + F*nu*kappa/(4*pi) vanishes.  F = 0 follows the same limit
    convention as the untwisted formula (effective gap -> m).
    """
    if nu <= 0:
        raise DomainError(f"nu must be > 0, got {nu}")
    if F == 0.0:
        return 1.0 if m == 0.0 else 0.0
    gap = m + F * nu * kappa / (4.0 * math.pi)
    return math.exp(-(math.pi**2) * gap**2 / (nu * abs(F)))


def pt_speed(m: float, nu: float, kappa: float) -> PtCondition:
    """Analytic perfect-tunneling speed F_PT = -4*pi*m/(nu*kappa).

    For m = 0 the condition degenerates to F_PT = 0 (the adiabatic
    limit).  A finite gap with no twist has no finite PT speed.
    """
    if nu <= 0:
        raise DomainError(f"nu must be > 0, got {nu}")
    if m == 0.0:
        return PtCondition(f_pt=0.0, kind="analytic", p_at_pt=1.0)
    if kappa == 0.0:
        raise DomainError("kappa = 0 with m > 0 has no finite PT speed")
    return PtCondition(
        f_pt=-4.0 * math.pi * m / (nu * kappa), kind="analytic", p_at_pt=1.0
    )


def _sweep_probability_at(params: DriveParams, F: float, opts: PropagationOptions) -> float:
    # Exact zero speed cannot be propagated; nudge by a half ulp of the
    # bracket scale so even-symmetric objectives remain well defined.
    if F == 0.0:
        F = 1e-12
    point = replace(params, F=F, T=None)
    point = point.with_duration(sweep_duration(point))
    return propagate_sweep(point, opts).p


def _golden_section_max(f, a: float, b: float, xtol: float) -> float:
    """Golden-section search for the maximizer of f on [a, b]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi_sq = (3.0 - math.sqrt(5.0)) / 2.0
    dist = b - a
    if dist <= xtol:
        return (a + b) / 2.0
    n = int(math.ceil(math.log(xtol / dist) / math.log(inv_phi)))
    c = a + inv_phi_sq * dist
    d = a + inv_phi * dist
    yc, yd = f(c), f(d)
    for _ in range(n - 1):
        if yc > yd:
            b, d, yd = d, c, yc
            dist *= inv_phi
            c = a + inv_phi_sq * dist
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            dist *= inv_phi
            d = a + inv_phi * dist
            yd = f(d)
    return (a + d) / 2.0 if yc > yd else (c + b) / 2.0


def pt_speed_numeric(
    params: DriveParams,
    bracket: tuple[float, float],
    n_grid: int = 21,
    refine_tol: float = 1e-4,
    options: PropagationOptions | None = None,
) -> PtCondition:
    """Locate the speed maximizing the propagated tunneling probability.

    A coarse grid (>= 21 points) over ``bracket`` brackets the maximum,
    then golden-section refinement narrows it to |dF| <= ``refine_tol``.
    The sweep duration is recomputed per speed.  A maximum on the grid
    boundary raises :class:`BracketBoundaryError` so the caller can
    widen the bracket.
    """
    if params.kappa == 0.0:
        raise DomainError("numeric PT search needs kappa != 0")
    a, b = bracket
    if not (b > a):
        raise DomainError(f"invalid bracket {bracket}")
    n_grid = max(int(n_grid), 21)
    opts = options or PropagationOptions()

    def objective(F: float) -> float:
        return _sweep_probability_at(params, F, opts)

    grid = np.linspace(a, b, n_grid)
    probs = np.array([objective(F) for F in grid])
    i_max = int(np.argmax(probs))
    if i_max == 0:
        raise BracketBoundaryError("lower", bracket)
    if i_max == n_grid - 1:
        raise BracketBoundaryError("upper", bracket)

    f_pt = _golden_section_max(objective, grid[i_max - 1], grid[i_max + 1], refine_tol)
    return PtCondition(f_pt=float(f_pt), kind="numeric", p_at_pt=objective(f_pt))


def pt_speed_numeric_auto(
    params: DriveParams,
    n_grid: int = 21,
    refine_tol: float = 1e-4,
    options: PropagationOptions | None = None,
    max_widenings: int = 8,
) -> PtCondition:
    """Numeric PT search with an automatic, self-widening bracket.

    The initial bracket surrounds the analytic prediction by +/-50%
    (one sign of F only; the sign is fixed by the analytic condition)
    or, for m = 0, straddles the adiabatic limit symmetrically.  Each
    boundary hit doubles the bracket on that side; exhaustion raises
    :class:`BracketBoundaryError`.
    """
    if params.kappa == 0.0:
        raise DomainError("numeric PT search needs kappa != 0")
    if params.m == 0.0:
        lo, hi = -0.02, 0.02
    else:
        center = pt_speed(params.m, params.nu, params.kappa).f_pt
        lo, hi = sorted((1.5 * center, 0.5 * center))
    last: BracketBoundaryError | None = None
    for _ in range(max_widenings):
        try:
            return pt_speed_numeric(
                params, (lo, hi), n_grid=n_grid, refine_tol=refine_tol, options=options
            )
        except BracketBoundaryError as exc:
            last = exc
            width = hi - lo
            if exc.side == "lower":
                lo -= width
            else:
                hi += width
    raise BracketBoundaryError(last.side if last else "lower", (lo, hi))


def _eigvecs_at(params: DriveParams, q: float) -> tuple[np.ndarray, np.ndarray]:
    es = instantaneous_eigensystem(field_at_coordinate(params, q))
    return es.v1, es.v2


def berry_connection(
    params: DriveParams, q: float, dq: float
) -> tuple[float, float, complex]:
    """(A11, A22, A12) at q via central differences of the eigenvectors.

    A_nl(q) = <n(q)| i d/dq |l(q)>; the diagonal entries are real (up to
    finite-difference noise) and returned as floats, in units of 1/s.
    """
    if not (dq > 0):
        raise DomainError(f"dq must be > 0, got {dq}")
    v1m, v2m = _eigvecs_at(params, q - dq)
    v1c, v2c = _eigvecs_at(params, q)
    v1p, v2p = _eigvecs_at(params, q + dq)
    dv1 = (v1p - v1m) / (2.0 * dq)
    dv2 = (v2p - v2m) / (2.0 * dq)
    a11 = 1j * np.vdot(v1c, dv1)
    a22 = 1j * np.vdot(v2c, dv2)
    a12 = 1j * np.vdot(v1c, dv2)
    return float(a11.real), float(a22.real), complex(a12)


def default_geometry_step(params: DriveParams) -> float:
    """Finite-difference step: 1e-4 of the swept q-range T*|F|."""
    if params.F == 0.0:
        raise DomainError("default dq needs F != 0")
    return 1e-4 * params.duration * abs(params.F)


def geometric_amplitude_factor(
    params: DriveParams, q: float = 0.0, dq: float | None = None
) -> float:
    """Numeric R12(q) = -A11 + A22 + d/dq arg A12.

    The phase derivative uses an unwrapped three-point stencil of
    arg A12 with the same step dq (default :func:`default_geometry_step`).
    At q = 0 the result matches nu*kappa to better than 1e-3 relative
    for the default step on the parameter scales of interest.
    """
    if dq is None:
        dq = default_geometry_step(params)
    if not (dq > 0):
        raise DomainError(f"dq must be > 0, got {dq}")
    phases = []
    for qs in (q - dq, q, q + dq):
        _, _, a12 = berry_connection(params, qs, dq)
        if abs(a12) < 1e-14:
            raise DomainError(
                f"|A12| = {abs(a12):.3e} below 1e-14 at q = {qs}; phase undefined"
            )
        phases.append(np.angle(a12))
    phases = np.unwrap(phases)
    darg = (phases[2] - phases[0]) / (2.0 * dq)
    a11, a22, _ = berry_connection(params, q, dq)
    return float(-a11 + a22 + darg)
