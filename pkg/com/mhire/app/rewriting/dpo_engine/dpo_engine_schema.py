from pydantic import BaseModel, Field


class SchemeApplication(BaseModel):
    scheme: str = Field(..., description="Scheme name")
    interface_vertices: int = Field(..., description="Size of the preserved interface")
    instance: str = Field(..., description="All graphs and maps of the double pushout")
    reaction: str = Field(..., description="The instance as a reaction")
