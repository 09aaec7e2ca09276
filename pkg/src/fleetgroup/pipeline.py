"""The full chain from a fleet to a graded accuracy curve."""

from __future__ import annotations

from dataclasses import dataclass

from fleetgroup.fleet_data import FleetDataset
from fleetgroup.graph import DissimilarityMatrix, RawCrossMatrix, cross_rse_matrix, fit_fleet, symmetrize
from fleetgroup.meta_validation import ElbowReport, SweepConfig, SweepRecord, SweepResult, find_elbow, lambda_sweep
from fleetgroup.regression import BasisSpec, RegressionModel


@dataclass(frozen=True, eq=False)
class PipelineResult:
    models: list[RegressionModel]
    raw: RawCrossMatrix
    dissimilarity: DissimilarityMatrix
    sweep: SweepResult
    elbow: ElbowReport

    def chosen_record(self) -> SweepRecord | None:
        """Best record at the elbow's candidate k, if there is one."""
        if self.elbow.candidate_k is None:
            return None
        return self.sweep.best_per_k.get(self.elbow.candidate_k)


def dissimilarity(fleet: FleetDataset, basis: BasisSpec = BasisSpec()):
    models = fit_fleet(fleet, basis)
    raw = cross_rse_matrix(models, fleet)
    return models, raw, symmetrize(raw)


def run_pipeline(
    fleet: FleetDataset,
    basis: BasisSpec = BasisSpec(),
    config: SweepConfig = SweepConfig(),
    clear_threshold: float = 0.5,
    fuzzy_threshold: float = 0.15,
) -> PipelineResult:
    models, raw, dis = dissimilarity(fleet, basis)
    sweep = lambda_sweep(fleet, dis, basis, config)
    elbow = find_elbow(sweep, clear_threshold, fuzzy_threshold)
    return PipelineResult(models, raw, dis, sweep, elbow)
