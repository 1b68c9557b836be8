from typing import List

from pydantic import BaseModel, Field


class TermApplication(BaseModel):
    term: str = Field(..., description="The applied term in `;`-separated generator syntax")
    length: int = Field(..., description="Number of generators, identities excluded")
    domain: str = Field(..., description="Name of the graph the term was applied to")
    result: str = Field(..., description="Resulting graph in .cg syntax")
    trace: List[str] = Field(default_factory=list, description="Intermediate graphs, when requested")
