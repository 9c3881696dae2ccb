"""Sequential ligand selection: robust classifier ensembles, GP baselines,
DMTA-cycle simulation, analytics, and a live campaign service."""

from .classifier import (
    SolverReport,
    TrainingProblem,
    expected_hinge_loss,
    expected_hinge_loss_grad,
    objective,
    train,
)
from .core import (
    BINARY,
    DENSE,
    ConfigError,
    Dataset,
    DatasetError,
    EndpointSpec,
    Ligand,
    LinearClassifier,
    Observation,
    PolicyConfig,
    validate_dataset,
)
from .data_io import (
    SyntheticConfig,
    generate_synthetic,
    load_binary,
    load_csv,
    save_binary,
    save_csv,
)
from .policy import RandomPolicy, SpadePolicy
from .simulator import (
    CampaignResult,
    RunResult,
    endpoint_reached,
    make_policy,
    run_campaign,
    run_replicates,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
