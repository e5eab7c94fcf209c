"""Model-free estimation of the dimension of space from sensorimotor data."""

from sensodim.bootstrap import BootstrapParams, BootstrapTrace, Strategy, bootstrap_step, run_bootstrap
from sensodim.cca import CcaParams, CostProfile, Projection, cca_cost, cca_project, estimate_dim_cca
from sensodim.estimators import (
    DimensionEstimate,
    Method,
    displacement_dim,
    estimate_dim_linear,
    singular_spectrum,
)
from sensodim.harness import ExperimentPlan, TrialRecord, ground_truth, run_experiment, summarize
from sensodim.sim import (
    Configuration,
    ExplorationMode,
    System,
    SystemSpec,
    VariationMatrix,
    build_system,
    explore,
    project_source,
    rotation_operator,
    sample_configurations,
    sense,
    source_world_position,
)

__version__ = "0.1.0"
