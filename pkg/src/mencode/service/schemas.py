"""Request and response models for the mencode service."""

from __future__ import annotations

from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field

Method = Literal["MMLWF", "MMLP", "MMLV", "MDL"]

DEFAULT_METHODS: list[Method] = ["MMLWF", "MMLP", "MMLV", "MDL"]


class VariableSpec(BaseModel):
    name: str
    kind: Literal["categorical", "continuous"]
    labels: list[str] | None = None
    bins: int = Field(default=4, ge=2)
    strategy: Literal["equal_frequency", "equal_width"] = "equal_frequency"


class SchemaSpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    variables: list[VariableSpec] = Field(min_length=1)
    class_variable: str | None = Field(default=None, alias="class")
    header: Literal["auto", "yes", "no"] = "auto"

    def to_config_dict(self) -> dict:
        out: dict = {"variables": [], "header": self.header}
        for v in self.variables:
            entry: dict = {"name": v.name, "kind": v.kind}
            if v.kind == "categorical":
                entry["labels"] = list(v.labels or [])
            else:
                entry["bins"] = v.bins
                entry["strategy"] = v.strategy
            out["variables"].append(entry)
        if self.class_variable is not None:
            out["class"] = self.class_variable
        return out


class DatasetPayload(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str = "dataset"
    csv_text: str
    schema_spec: SchemaSpec = Field(alias="schema")


class ReportRow(BaseModel):
    dataset: str
    method: str
    protocol: str
    k: int | None = None
    repeats: int | None = None
    s: int | None = None
    ess: float
    seed: int
    min: float
    mean: float
    max: float


class BenchRequest(BaseModel):
    dataset: DatasetPayload
    methods: list[Method] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    k: int = Field(default=5, ge=2)
    repeats: int = Field(default=100, ge=1)
    ess: Union[float, Literal["auto"]] = "auto"
    seed: int = 0
    jobs: int = Field(default=1, ge=1)
    dump_models: bool = False


class BenchResponse(BaseModel):
    rows: list[ReportRow]
    ess: float
    csv_text: str
    models: dict[str, dict] | None = None


class LooRequest(BaseModel):
    dataset: DatasetPayload
    methods: list[Method] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    fractions: list[float] = Field(default_factory=lambda: [1.0])
    ess: Union[float, Literal["auto"]] = "auto"
    seed: int = 0
    jobs: int = Field(default=1, ge=1)
    dump_models: bool = False


class LooResponse(BaseModel):
    rows: list[ReportRow]
    ess: float
    csv_text: str
    models: dict[str, dict] | None = None


class CurveRequest(BaseModel):
    dataset: DatasetPayload
    methods: list[Method] = Field(default_factory=lambda: list(DEFAULT_METHODS))
    fractions: list[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5, 1.0])
    ess: Union[float, Literal["auto"]] = "auto"
    seed: int = 0
    jobs: int = Field(default=1, ge=1)


class CurvePointRow(BaseModel):
    s: int
    method: str
    mean_log_score_bits: float
    relative_to_mmlwf_bits: float


class CurveResponse(BaseModel):
    rows: list[CurvePointRow]
    ess: float
    csv_text: str
    plot_csv_text: str


# --- codelab demos ---


class EstimatesRequest(BaseModel):
    n: int = Field(ge=1)
    k: int | None = Field(default=None, ge=0)


class EstimateRow(BaseModel):
    n: int
    k: int
    mml_wf: float | None
    mml_p: float | None
    mml_v: float | None


class EstimatesResponse(BaseModel):
    rows: list[EstimateRow]
    csv_text: str


class LengthsRequest(BaseModel):
    n: int = Field(ge=1)
    k: int = Field(ge=0)
    points: int = Field(default=25, ge=1)


class LengthsRow(BaseModel):
    theta: float
    fisher_information: float
    optimal_precision: float
    two_part_nats: float
    expected_nats: float
    expected_bits: float


class LengthsResponse(BaseModel):
    rows: list[LengthsRow]
    csv_text: str


class SmmlRequest(BaseModel):
    n: int = Field(ge=1)
    space: Literal["suffstat", "sequence"] = "suffstat"
    grid: list[float] | None = None
    grid_points: int = Field(default=9, ge=1)
    max_codebook_size: int = Field(default=3, ge=1)


class CodewordRow(BaseModel):
    value: float
    length_nats: float
    length_bits: float


class SmmlOutcomeRow(BaseModel):
    outcome: str
    successes: int
    marginal: float
    codeword_index: int
    total_length_nats: float
    total_length_bits: float


class SmmlResponse(BaseModel):
    expected_length_nats: float
    expected_length_bits: float
    codebook: list[CodewordRow]
    outcomes: list[SmmlOutcomeRow]
    csv_text: str


class NormalizeRequest(BaseModel):
    n: int = Field(ge=1)
    codebook: list[float] = Field(min_length=1)
    space: Literal["suffstat", "sequence"] = "sequence"


class NormalizeOutcomeRow(BaseModel):
    outcome: str
    successes: int
    region: int
    plain_bits: float
    normalized_bits: float


class NormalizeResponse(BaseModel):
    normalizers: list[float]
    rows: list[NormalizeOutcomeRow]
    csv_text: str


class ErrorBody(BaseModel):
    error: str
    message: str
    min_feasible_ess: float | None = None
