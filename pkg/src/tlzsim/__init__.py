"""tlzsim: quadratically twisted Landau-Zener sweeps for a two-level spin.

Exact Schrodinger propagation of the swept drive field, closed-form
tunneling probabilities with their perfect-tunneling conditions,
rotating-frame pulse synthesis, quasi-static dephasing and
amplitude-error robustness analyses, and a deterministic parameter-scan
driver with CSV/SVG export (also available as the ``tlz-scan`` CLI).
"""

from .analytics import (
    PtCondition,
    berry_connection,
    default_geometry_step,
    geometric_amplitude_factor,
    lz_probability,
    pt_speed,
    pt_speed_numeric,
    pt_speed_numeric_auto,
    tlz_probability,
)
from .errors import (
    BracketBoundaryError,
    DegenerateFieldError,
    DomainError,
    IntegrationError,
    TlzError,
)
from .model import (
    DriveParams,
    EigenSystem,
    FieldVector,
    field_at,
    field_at_coordinate,
    hamiltonian_matrix,
    instantaneous_eigensystem,
    sweep_coordinate,
    sweep_duration,
)
from .noise import (
    DephasingModel,
    RobustnessInterval,
    amplitude_error_probability,
    dephased_probability,
    drive_robustness_interval,
    rabi_probability,
    rabi_robustness_interval,
    robustness_interval,
    shifted_probability,
)
from .propagate import (
    PropagationOptions,
    SpinState,
    SweepResult,
    propagate_sweep,
    trajectory,
    tunneling_probability,
)
from .pulse import (
    ConstraintCheck,
    PrepAngles,
    PulseProgram,
    prep_angles,
    prep_rotation_error,
    reconstruct_field,
    simulate_program,
    synthesize_drive,
    verify_constraints,
    write_waveform_csv,
)
from .scan import (
    Axis,
    PtLocusPoint,
    ScanResult,
    ScanSpec,
    export_csv,
    export_svg,
    pt_locus,
    read_scan_csv,
    run_scan,
)
from .version import __version__

__all__ = [
    "__version__",
    # model
    "DriveParams", "FieldVector", "EigenSystem",
    "field_at", "field_at_coordinate", "sweep_coordinate",
    "sweep_duration", "instantaneous_eigensystem", "hamiltonian_matrix",
    # propagation
    "PropagationOptions", "SpinState", "SweepResult",
    "propagate_sweep", "tunneling_probability", "trajectory",
    # analytics
    "PtCondition", "lz_probability", "tlz_probability",
    "pt_speed", "pt_speed_numeric", "pt_speed_numeric_auto",
    "berry_connection", "geometric_amplitude_factor", "default_geometry_step",
    # pulse
    "PulseProgram", "PrepAngles", "ConstraintCheck",
    "synthesize_drive", "reconstruct_field", "verify_constraints",
    "prep_rotation_error", "prep_angles", "simulate_program",
    "write_waveform_csv",
    # noise
    "DephasingModel", "RobustnessInterval",
    "dephased_probability", "shifted_probability",
    "amplitude_error_probability", "rabi_probability",
    "robustness_interval", "rabi_robustness_interval",
    "drive_robustness_interval",
    # scan
    "Axis", "ScanSpec", "ScanResult", "PtLocusPoint",
    "run_scan", "pt_locus", "export_csv", "export_svg", "read_scan_csv",
    # errors
    "TlzError", "DomainError", "DegenerateFieldError",
    "IntegrationError", "BracketBoundaryError",
]
