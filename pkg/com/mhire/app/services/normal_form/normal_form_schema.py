from typing import List

from pydantic import BaseModel, Field


class NormalizeResult(BaseModel):
    term: str = Field(..., description="Input term")
    normal_form: str = Field(..., description="Canonical representative of the term's normal form")
    input_failed_conditions: List[int] = Field(
        default_factory=list, description="Normal form conditions the input term does not meet")


class EqualityResult(BaseModel):
    left: str
    right: str
    equal: bool = Field(..., description="Whether both terms denote the same reaction on the graph")
    explanation: List[str] = Field(default_factory=list)
