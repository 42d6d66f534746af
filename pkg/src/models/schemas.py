"""
Pydantic models for everything lipkit reads or writes as JSON: spaces, functionals,
scenarios, manifests and run reports.
"""

from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from src.core.config import Settings

# exact rationals travel as "p/q" strings, reals as JSON numbers
Number = float | str


class PointDocument(BaseModel):
    """One point of a finite pointed metric space."""

    label: str
    coord: list[float] | None = None


class ModelDocument(BaseModel):
    """A finite-dimensional norm: ℓ_p, ℓ_∞, ℓ_1 or polyhedral."""

    kind: Literal["lp", "linf", "l1", "polyhedral"]
    dim: int = Field(ge=1)
    p: float | None = None
    generators: list[list[float]] | None = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "ModelDocument":
        if self.kind == "lp" and self.p is None:
            raise ValueError("lp models need an exponent p")
        if self.kind == "polyhedral" and not self.generators:
            raise ValueError("polyhedral models need generators")
        return self


class SpaceDocument(BaseModel):
    """Space JSON: dist may be omitted when every point has coordinates and a model is given."""

    points: list[PointDocument]
    base: int = 0
    dist: list[list[Number]] | None = None
    model: ModelDocument | None = None

    @model_validator(mode="after")
    def _check_distances(self) -> "SpaceDocument":
        if len(self.points) < 2:
            raise ValueError("a pointed metric space needs at least two points")
        if not 0 <= self.base < len(self.points):
            raise ValueError(f"base index {self.base} out of range")
        if self.dist is None:
            if self.model is None or any(pt.coord is None for pt in self.points):
                raise ValueError(
                    "dist omitted: coordinates for every point and a model are required"
                )
        return self


class FunctionalDocument(BaseModel):
    """A Lipschitz functional: values per point, with an inline space."""

    space: SpaceDocument
    values: list[Number]


class BallDocument(BaseModel):
    """One ball of the weak-density construction, points given by index or label."""

    center: int | str
    radius: Number
    eps: Number
    witness: int | str


class Expectation(BaseModel):
    """A check ``measured[measure] <relation> bound`` appended to a scenario."""

    measure: str
    relation: Literal["<", "<=", ">", ">=", "=="]
    bound: Number


ScenarioKind = Literal[
    "norm",
    "extend",
    "freenorm",
    "bpb",
    "ucx",
    "cantor",
    "sa-density",
    "seminorm",
    "c0check",
]


class Scenario(BaseModel):
    id: str
    kind: ScenarioKind
    inputs: dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    tolerances: dict[str, float] = Field(default_factory=dict)
    expect: list[Expectation] = Field(default_factory=list)

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, tolerances: dict[str, float]) -> dict[str, float]:
        for name in tolerances:
            if not name.endswith("_tolerance") or name not in Settings.model_fields:
                raise ValueError(f"unknown tolerance {name!r}")
        return tolerances


class Manifest(BaseModel):
    scenarios: list[Scenario] = Field(default_factory=list)

    @field_validator("scenarios")
    @classmethod
    def _unique_ids(cls, scenarios: list[Scenario]) -> list[Scenario]:
        seen: set[str] = set()
        for scenario in scenarios:
            if scenario.id in seen:
                raise ValueError(f"duplicate scenario id {scenario.id!r}")
            seen.add(scenario.id)
        return scenarios


class AuditEntryDocument(BaseModel):
    name: str
    measured: float
    bound: float
    relation: str
    passed: bool
    slack: float


class RunReport(BaseModel):
    """Outcome of one scenario. Every failure names the inequality with both sides."""

    scenario_id: str
    kind: str
    status: Literal["pass", "fail", "inconclusive"]
    measured: dict[str, Any] = Field(default_factory=dict)
    bounds: dict[str, Any] = Field(default_factory=dict)
    key_value: Number | None = None
    bound: Number | None = None
    slack: float | None = None
    violations: list[str] = Field(default_factory=list)
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    wall_ms: float | None = None
