"""Synthetic fleets of noisy lines through the origin with known grouping."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from fleetgroup.errors import InvalidConfig
from fleetgroup.fleet_data import EntityDataset, FleetDataset, write_fleet_csv

KINDS = ("no_grouping", "fuzzy_grouping", "clear_grouping")
KIND_ALIASES = {"none": "no_grouping", "no": "no_grouping", "fuzzy": "fuzzy_grouping", "clear": "clear_grouping"}
RNG_ALGORITHM = "numpy.random.Generator(PCG64)"

# slope law defaults per kind: (components, component std)
_MIXTURES = {"fuzzy_grouping": (6, 0.08), "clear_grouping": (5, 0.03)}


def canonical_kind(kind: str) -> str:
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise InvalidConfig(f"unknown scenario kind {kind!r}; choose from {', '.join(KINDS)}")
    return kind


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator settings. Mixture fields left as None take the per-kind default."""

    kind: str = "clear_grouping"
    n_curves: int = 30
    points_per_curve: int = 100
    x_range: tuple[float, float] = (0.0, 100.0)
    noise_std: float = 1.0
    seed: int = 0
    slope_range: tuple[float, float] = (0.5, 3.5)
    n_components: int | None = None
    component_std: float | None = None
    intercept: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        object.__setattr__(self, "x_range", tuple(float(v) for v in self.x_range))
        object.__setattr__(self, "slope_range", tuple(float(v) for v in self.slope_range))
        if self.kind != "no_grouping":
            comps, std = _MIXTURES[self.kind]
            if self.n_components is None:
                object.__setattr__(self, "n_components", comps)
            if self.component_std is None:
                object.__setattr__(self, "component_std", std)
        self.validate()

    def validate(self) -> None:
        if self.n_curves < 2:
            raise InvalidConfig("n_curves must be at least 2")
        if self.points_per_curve < 2:
            raise InvalidConfig("points_per_curve must be at least 2")
        lo, hi = self.x_range
        if not lo < hi:
            raise InvalidConfig("x_range must be increasing")
        if self.slope_range[0] > self.slope_range[1]:
            raise InvalidConfig("slope_range must be non-decreasing")
        if self.noise_std < 0:
            raise InvalidConfig("noise_std must be non-negative")
        if self.kind != "no_grouping":
            if self.n_components < 1 or self.n_components > self.n_curves:
                raise InvalidConfig("n_components must be between 1 and n_curves")
            if self.component_std < 0:
                raise InvalidConfig("component_std must be non-negative")

    def component_means(self) -> np.ndarray:
        lo, hi = self.slope_range
        return np.linspace(lo, hi, self.n_components)


@dataclass(frozen=True, eq=False)
class LabeledFleet:
    fleet: FleetDataset
    true_labels: np.ndarray
    slopes: np.ndarray
    config: ScenarioConfig
    metadata: dict = field(default_factory=dict)


def generate_scenario(config: ScenarioConfig) -> LabeledFleet:
    """Draw a fleet of noisy lines y = slope * x + intercept + noise.

    Draw order is fixed (labels, slopes, then per curve x followed by noise),
    so a seed fully determines the output. Mixture components get equal
    shares of the curves, assigned in shuffled order.
    """
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_curves
    if cfg.kind == "no_grouping":
        labels = np.arange(n)
        slopes = rng.uniform(*cfg.slope_range, size=n)
    else:
        labels = rng.permutation(np.arange(n) % cfg.n_components)
        slopes = cfg.component_means()[labels] + cfg.component_std * rng.standard_normal(n)

    width = len(str(n - 1))
    entities = []
    for i in range(n):
        x = rng.uniform(*cfg.x_range, size=cfg.points_per_curve)
        noise = cfg.noise_std * rng.standard_normal(cfg.points_per_curve)
        y = slopes[i] * x + cfg.intercept + noise
        entities.append(EntityDataset(f"unit{i:0{width}d}", x.reshape(-1, 1), y))

    meta = {"config": asdict(cfg), "rng": RNG_ALGORITHM}
    if cfg.kind != "no_grouping":
        meta["component_means"] = cfg.component_means().tolist()
    return LabeledFleet(FleetDataset(tuple(entities)), labels, slopes, cfg, meta)


def write_labeled_fleet(lf: LabeledFleet, outdir, timestamp: str | None = None) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"fleet": outdir / "fleet.csv", "labels": outdir / "labels.csv", "meta": outdir / "meta.json"}
    write_fleet_csv(lf.fleet, paths["fleet"])
    with paths["labels"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity_id", "true_label"])
        for eid, lab in zip(lf.fleet.entity_ids, lf.true_labels):
            w.writerow([eid, int(lab)])
    meta = dict(lf.metadata)
    meta["slopes"] = [float(s) for s in lf.slopes]
    if timestamp is not None:
        meta["generated_at"] = timestamp
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def read_labels_csv(path) -> dict[str, int]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return {row["entity_id"]: int(row["true_label"]) for row in csv.DictReader(fh)}
