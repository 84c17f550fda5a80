"""Spectral split-operator simulator for single-cycle-pulse electron transport."""

from .grids import (
    Axis,
    Grid,
    GridError,
    SpectralSpace,
    build_grid,
    transform_forward,
    transform_inverse,
)
from .fields import (
    DensityTrace,
    WaveField,
    density_z,
    expectation_pz,
    expectation_z,
    fidelity,
    inner_product,
    total_energy,
)
from .pulses import (
    DISPLACEMENT_RATIO,
    PulseTrain,
    SingleCyclePulse,
    design_for_displacement,
    distortion_ratio,
    field_to_intensity,
    intensity_to_field,
    train_from_displacements,
)
from .models import (
    HydrogenicLabel,
    PotentialField,
    SuperpositionSpec,
    chain_potential,
    coulomb_potential,
    helium_ion_potential_1d,
    helium_model,
    helium_total_potential,
    hydrogenic_state,
    superposition,
    two_electron_state,
)
from .solver import (
    PropagationPlan,
    Propagator,
    Trajectory,
    eigensolve_1d,
    exchange_residual,
    load_checkpoint,
    propagate,
    relax,
    save_checkpoint,
    step,
    translate,
)

__version__ = "0.1.0"
