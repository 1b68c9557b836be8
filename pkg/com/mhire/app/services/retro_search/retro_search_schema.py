from typing import List

from pydantic import BaseModel, Field


class StepSummary(BaseModel):
    bundle: str = Field(..., description="Directory the step was written to")
    key: str = Field(..., description="Fingerprint key ordering the steps")
    disconnection: str
    multiplicity: List[int] = Field(default_factory=list, description="Environment copies used by the matching")
    byproduct_vertices: int = 0


class RetroStepResult(BaseModel):
    target: str
    steps: List[StepSummary] = Field(default_factory=list)
    truncated: bool = False
    reason: str = ""
