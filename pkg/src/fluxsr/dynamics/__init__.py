"""Collective spin dynamics of a qubit ensemble coupled to a lossy cavity."""
from .blocks import BlockLayout, BlockLindblad, ae_generator, decay, dispersive_generator, drive_product
from .integrate import IntegrationError, TimeSeries, default_step, evolve, lindblad_rhs
from .models import (
    DriveSpec,
    SpinModel,
    ae_collapse,
    dispersive_beta,
    dispersive_collapse,
    dispersive_rate,
    dispersive_valid,
    dispersive_visibility,
    drive_hamiltonian,
    h_ae,
    h_dispersive,
    h_full_tavis_cummings,
    intensity,
    m_eff,
    shift_coefficient,
    sr_time,
    superradiant_rate,
    visibility,
)
from .operators import collective_ops, excited_count

__all__ = [
    "BlockLayout", "BlockLindblad", "DriveSpec", "IntegrationError", "SpinModel", "TimeSeries",
    "ae_collapse", "ae_generator", "collective_ops", "decay", "default_step",
    "dispersive_beta", "dispersive_collapse", "dispersive_generator", "dispersive_rate",
    "dispersive_valid", "dispersive_visibility", "drive_hamiltonian", "drive_product", "evolve",
    "excited_count", "h_ae", "h_dispersive", "h_full_tavis_cummings", "intensity",
    "lindblad_rhs", "m_eff", "shift_coefficient", "sr_time", "superradiant_rate", "visibility",
]
