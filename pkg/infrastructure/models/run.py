"""Run records, manifests and evaluation reports (JSON contracts of a run directory)."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from core.experiment_config import ExperimentConfig, GaussianMixtureConfig

RunStatus = Literal["converged", "max_epochs", "completed"]


class EpochRecord(BaseModel):
    """One line of epochs.jsonl."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    t: int = Field(ge=0)
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    value: float
    gen_inc: float = Field(alias="genInc")
    dis_inc: float = Field(alias="disInc")
    support_g: list[int]
    support_d: list[int]
    snapshots_on_disk: int = Field(ge=0)
    pruned_g: list[int] = Field(default_factory=list)
    pruned_d: list[int] = Field(default_factory=list)

    def to_json_line(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


class SolutionPayload(BaseModel):
    """Final meta-strategies over the final support sets."""

    sigma_g: list[float]
    sigma_d: list[float]
    value: float


class RunRecord(BaseModel):
    """Full history of one run plus its terminal status."""

    model_config = ConfigDict(populate_by_name=True)

    variant: str
    epochs: list[EpochRecord] = Field(default_factory=list)
    status: RunStatus = "max_epochs"
    solution: Optional[SolutionPayload] = None
    support_g: list[int] = Field(default_factory=list)
    support_d: list[int] = Field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def loop_epochs(self) -> int:
        return sum(1 for record in self.epochs if record.t > 0)


class RunManifest(BaseModel):
    """Everything needed to reproduce a run."""

    config: ExperimentConfig
    seed: int
    variant: str
    dataset: GaussianMixtureConfig
    output_dir: str
    version: str


class RunSummary(BaseModel):
    """summary.json."""

    variant: str
    status: RunStatus
    epochs: int
    solution: Optional[SolutionPayload] = None
    support_g: list[int]
    support_d: list[int]
    coverage: Optional["CoverageReport"] = None


class CoverageReport(BaseModel):
    """Mode coverage of a sample set on the Gaussian ring."""

    modes: int = Field(ge=1)
    modes_recovered: int = Field(ge=0)
    mode_counts: list[int]
    high_quality_fraction: float = Field(ge=0, le=1)
    sample_count: int = Field(ge=1)


RunSummary.model_rebuild()
