from typing import Dict, Optional

from pydantic import BaseModel, Field


class ChiralityVerdict(BaseModel):
    left: str
    right: str
    preserving: Optional[Dict[str, str]] = Field(None, description="An orientation-preserving isomorphism")
    reflecting: Optional[Dict[str, str]] = Field(None, description="An orientation-reflecting isomorphism")
    chiral: bool
