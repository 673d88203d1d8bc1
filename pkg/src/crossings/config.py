import logging
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import yaml
from pydantic import Field, TypeAdapter, ValidationError, model_validator

from config.base import StrictModel
from crossings.errors import ConfigError
from crossings.exact_enumeration import SmallGraph
from crossings.lattice_mc import LatticeKind, LatticeSpec, Shape
from crossings.seeding import SEED_MAX
from crossings.sle_engine import SleParams
from crossings.statistics import Z95

logger = logging.getLogger(__name__)

Seed = Annotated[int, Field(ge=0, le=SEED_MAX)]


class OutputSpec(StrictModel):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class ExperimentBase(StrictModel):
    master_seed: Optional[Seed] = None
    workers: Optional[int] = Field(default=None, ge=1)
    output: OutputSpec = Field(default_factory=OutputSpec)


class FormulaExperiment(ExperimentBase):
    kind: Literal["formula"] = "formula"
    eta: list[float] = []
    rect_r: list[float] = []
    x: list[float] = []
    strip_ratio: list[float] = []

    @model_validator(mode="after")
    def _some_grid(self) -> "FormulaExperiment":
        if not (self.eta or self.rect_r or self.x or self.strip_ratio):
            raise ValueError("give at least one of eta, rect_r, x, strip_ratio")
        return self


class GeometryExperiment(ExperimentBase):
    kind: Literal["geometry"] = "geometry"
    r: list[float] = []
    k: list[float] = []
    x: list[float] = []

    @model_validator(mode="after")
    def _some_grid(self) -> "GeometryExperiment":
        if not (self.r or self.k or self.x):
            raise ValueError("give at least one of r, k, x")
        return self


class McExperiment(ExperimentBase):
    kind: Literal["mc"] = "mc"
    lattice: LatticeSpec
    n_trials: int = Field(ge=1)
    # boundary points on BC for the separation observable (triangles only)
    smirnov_x: list[float] = []

    @model_validator(mode="after")
    def _smirnov_needs_triangle(self) -> "McExperiment":
        if self.smirnov_x and self.lattice.shape != Shape.equilateral_triangle:
            raise ValueError("smirnov_x needs an equilateral_triangle lattice")
        return self


class GraphSource(StrictModel):
    """Exactly one of an inline graph, a JSON graph file or a square-bond lattice."""

    graph: Optional[SmallGraph] = None
    graph_path: Optional[str] = None
    lattice: Optional[LatticeSpec] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "GraphSource":
        given = [s for s in (self.graph, self.graph_path, self.lattice) if s is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of graph, graph_path, lattice")
        if self.lattice is not None and self.lattice.kind != LatticeKind.square_bond:
            raise ValueError("enumeration graphs come from square_bond lattices")
        return self


class EnumerateExperiment(ExperimentBase):
    kind: Literal["enumerate"] = "enumerate"
    source: GraphSource
    p: list[float] = Field(default=[0.5], min_length=1)


class SleExperiment(ExperimentBase):
    kind: Literal["sle"] = "sle"
    a: float = Field(gt=0.0)
    b: float = Field(gt=0.0)
    n_traces: int = Field(ge=1)
    params: SleParams = Field(default_factory=SleParams)


class Check(StrictModel):
    """One prediction/measurement pair of a compare run."""

    label: str
    predictor: Literal["formula", "enumerate"]
    measurer: Literal["mc", "smirnov", "strip", "sle", "enumerate"]
    quantity: Literal["p_cross", "mean_nc"] = "p_cross"
    lattice: Optional[LatticeSpec] = None
    source: Optional[GraphSource] = None
    p: float = Field(default=0.5, ge=0.0, le=1.0)
    n_trials: int = Field(default=10_000, ge=1)
    x: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    a: Optional[float] = Field(default=None, gt=0.0)
    b: Optional[float] = Field(default=None, gt=0.0)
    sle: SleParams = Field(default_factory=SleParams)
    z: float = Field(default=Z95, gt=0.0)
    # absolute tolerance; replaces the confidence interval when set
    tolerance: Optional[float] = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def _consistent(self) -> "Check":
        m = self.measurer
        if m in ("mc", "smirnov", "strip") and self.predictor == "formula" and self.lattice is None:
            raise ValueError(f"measurer {m} needs a lattice")
        if m == "smirnov" and self.x is None:
            raise ValueError("measurer smirnov needs x")
        if m == "sle" and (self.a is None or self.b is None):
            raise ValueError("measurer sle needs a and b")
        if self.predictor == "enumerate" and self.source is None:
            raise ValueError("predictor enumerate needs a graph source")
        if self.predictor == "enumerate" and m not in ("mc", "enumerate"):
            raise ValueError("predictor enumerate pairs with measurer mc or enumerate")
        if self.predictor == "formula" and m == "enumerate":
            raise ValueError("measurer enumerate pairs with predictor enumerate")
        if m in ("smirnov", "sle") and self.quantity != "p_cross":
            raise ValueError(f"measurer {m} only measures p_cross")
        if m == "strip" and self.quantity != "mean_nc":
            raise ValueError("measurer strip only measures mean_nc")
        return self


class CompareExperiment(ExperimentBase):
    kind: Literal["compare"] = "compare"
    checks: list[Check] = Field(min_length=1)


ExperimentConfig = Annotated[
    Union[
        FormulaExperiment,
        GeometryExperiment,
        McExperiment,
        EnumerateExperiment,
        SleExperiment,
        CompareExperiment,
    ],
    Field(discriminator="kind"),
]

_EXPERIMENT_ADAPTER: TypeAdapter[ExperimentConfig] = TypeAdapter(ExperimentConfig)


def load_config_from_file(config_path: Union[str, Path]) -> dict[str, Any]:
    """Load an experiment document; YAML, or JSON which YAML reads as-is."""
    try:
        with open(config_path, "r") as f:
            document = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to load config from {config_path}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"{config_path} does not hold a mapping")
    return document


def parse_experiment(document: dict[str, Any]) -> ExperimentConfig:
    try:
        return _EXPERIMENT_ADAPTER.validate_python(document)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment document: {e}") from e
