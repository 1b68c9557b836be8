from typing import List

from pydantic import BaseModel, Field


class Violation(BaseModel):
    clause: str = Field(..., description="Identifier of the failed condition")
    vertices: List[str] = Field(default_factory=list, description="Vertices (or pair) the condition failed on")
    message: str = Field("", description="Human readable explanation")

    def __str__(self) -> str:
        where = ",".join(self.vertices)
        return f"{self.clause}[{where}]: {self.message}" if self.message else f"{self.clause}[{where}]"
