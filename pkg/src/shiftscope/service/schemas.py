"""Pydantic request/response models for the diagnostics service."""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, model_validator


class DistributionIn(BaseModel):
    """Either exact masses or observed counts, keyed by label."""

    mass: Optional[Dict[str, float]] = None
    counts: Optional[Dict[str, int]] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.mass is None) == (self.counts is None):
            raise ValueError("provide exactly one of 'mass' or 'counts'")
        return self


class CoarseningIn(BaseModel):
    """A fitted coarsening (as persisted JSON) or a plain label map."""

    fitted: Optional[Dict[str, Any]] = None
    label_map: Optional[Dict[str, str]] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.fitted is None) == (self.label_map is None):
            raise ValueError("provide exactly one of 'fitted' or 'label_map'")
        return self


class EnergyRequest(BaseModel):
    a: DistributionIn
    b: DistributionIn
    coarsening: Optional[CoarseningIn] = None


class EnergyResponse(BaseModel):
    value: float
    mode: str
    coarsened: bool
    estimator_note: Optional[str] = None


TestSpecEntry = Union[str, Dict[str, Any]]


class DialogueIn(BaseModel):
    turns: List[Dict[str, str]]  # [{"q": ..., "a": ...}]
    id: Optional[str] = None


class PairIn(BaseModel):
    context_id: str
    human: DialogueIn
    generated: DialogueIn
    u: Optional[str] = None


class TestdivRequest(BaseModel):
    pairs: List[PairIn]
    tests: List[TestSpecEntry]


class TestdivResponse(BaseModel):
    per_test: Dict[str, float]
    total: float
    n_pairs: int
    skipped: Dict[str, int]


class TdChangeRequest(BaseModel):
    source: TestdivResponse
    target: TestdivResponse


class TdChangeResponse(BaseModel):
    per_test: Dict[str, float]
    total: float


class JointIn(BaseModel):
    contexts: Dict[str, float]
    human: Dict[str, Dict[str, float]]
    gen1: Dict[str, Dict[str, float]]
    gen2: Dict[str, Dict[str, float]]
    noise: Dict[str, float]
    dialogues: Optional[Dict[str, DialogueIn]] = None


class BoundRequest(BaseModel):
    joint: JointIn
    # test: either {"kind": "table", "values": {d: {u: v}}} or
    # {"kind": "builtin", "name": ...} over the joint's dialogue table
    test: Dict[str, Any]
    coarse_map: Dict[str, str]


class BoundResponse(BaseModel):
    gamma: float
    phi: float
    delta: float
    epsilon: float
    td_source: float
    td_target: float
    rhs: float
    g_unconstrained_cells: int


class VerifyRequest(BaseModel):
    seed: int = 0
    l2_pairs: int = Field(default=2000, ge=1)
    fuzz_trials: int = Field(default=2000, ge=1)
    quadrature_pairs: int = Field(default=5, ge=1)
    quadrature_tau: float = Field(default=1e4, gt=0)
    quadrature_steps: int = Field(default=200_000, ge=1000)


class ScenarioIn(BaseModel):
    n_contexts: int = 4
    n_objects_per_context: int = 12
    m: int = 7
    world_seed: int = 7
    questions: Optional[List[str]] = None
    corpus_size: int = 600
    n_rollouts: int = 500
    k_coarse: int = 12
    encoder_refinement: int = 2
    tests: Optional[List[TestSpecEntry]] = None
    compare_step: float = 0.15
    compare_epochs: int = 3


class SweepRequest(BaseModel):
    scenario: ScenarioIn = ScenarioIn()
    magnitudes: List[float]
    seeds: List[int]


class SweepResponse(BaseModel):
    rows: List[Dict[str, Any]]
    pearson_r: float
    columns: List[str]


class CompareRequest(BaseModel):
    scenario: ScenarioIn = ScenarioIn()
    epochs: Optional[int] = None
    seeds: List[int]


class CompareResponse(BaseModel):
    records: List[Dict[str, Any]]
    frac_seeds_lower_eps: float
    frac_seeds_dtd_not_worse: float


class CoarsenFitRequest(BaseModel):
    embeddings: Dict[str, List[float]]
    k: int = Field(ge=1)
    seed: int


class CoarsenFitResponse(BaseModel):
    coarsening: Dict[str, Any]
    n_clusters: int
    k_reduced: bool


class CoarsenAssignRequest(BaseModel):
    coarsening: Dict[str, Any]
    vectors: List[List[float]]


class CoarsenAssignResponse(BaseModel):
    clusters: List[int]
    representatives: List[str]


class ErrorBody(BaseModel):
    code: str
    detail: str
