from pydantic import BaseModel, Field


class TranslateResult(BaseModel):
    term: str
    reaction: str = Field(..., description="The term's reaction in reaction-file syntax")
    image_form: bool = Field(..., description="Whether both maps of the reaction are identities")


class DecomposeResult(BaseModel):
    term: str = Field(..., description="Disconnection term whose reaction factors the input")
    length: int
    iota: str = Field(..., description="Relabelling isomorphism completing the factorisation")
