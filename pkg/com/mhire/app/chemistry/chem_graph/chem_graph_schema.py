from typing import List

from pydantic import BaseModel, Field

from com.mhire.app.common.violation_schema import Violation


class GraphReport(BaseModel):
    name: str = Field(..., description="Graph name from the file header or file stem")
    vertices: int = Field(..., description="Number of vertices")
    bonds: int = Field(..., description="Number of bonds")
    components: int = Field(..., description="Number of connected components")
    chemical: bool = Field(..., description="Whether every chemical graph clause holds")
    molecular: bool = Field(False, description="Connected, chemical and free of binding sites")
    synthon: bool = Field(False, description="Connected and chemical")
    triangles: int = 0
    tetrahedra: int = 0
    violations: List[Violation] = Field(default_factory=list)
