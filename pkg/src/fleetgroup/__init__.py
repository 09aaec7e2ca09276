"""Group entities of a fleet by the behavior of their regression models."""

from fleetgroup.community import (
    CommunityPartition,
    detect_communities,
    leading_eigenvector_split,
    modularity,
    modularity_matrix,
)
from fleetgroup.fleet_data import (
    EntityDataset,
    FleetDataset,
    Observation,
    load_fleet_csv,
    validate_fleet,
    write_fleet_csv,
)
from fleetgroup.graph import (
    AdjacencyGraph,
    DissimilarityMatrix,
    RawCrossMatrix,
    cross_rse_matrix,
    fit_fleet,
    symmetrize,
    threshold_graph,
)
from fleetgroup.meta_validation import (
    ElbowReport,
    SweepConfig,
    SweepResult,
    elbow_from_curve,
    find_elbow,
    lambda_grid,
    lambda_sweep,
    merge_groups,
    meta_accuracy,
    split_train_validation,
)
from fleetgroup.regression import BasisSpec, RegressionModel, fit_entity_model, predict, rse
from fleetgroup.synthgen import LabeledFleet, ScenarioConfig, generate_scenario

__version__ = "0.1.0"
