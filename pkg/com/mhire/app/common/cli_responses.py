import json
import time
from typing import Dict, Any, Optional

from pydantic import BaseModel


class CliOutput(BaseModel):
    exit_code: int
    content: Dict[str, Any]
    text: str = ""

    def render(self, output_format: str) -> str:
        if output_format == "json-lines":
            return json.dumps(self.content, sort_keys=True)
        return self.text


class CliResponse:

    def __init__(self, version=0.1):
        self.version = version

    def success_response(
        self, exit_code: int, message: str, data: Dict[str, Any], resource: str, start_time: float,
        text: Optional[str] = None
    ) -> CliOutput:
        duration = round(time.time() - start_time, 2)
        return CliOutput(
            exit_code=exit_code,
            content={
                "success": exit_code == ExitCode.SUCCESS,
                "message": message,
                "data": data,
                "resource": resource,
                "duration": f"{duration}s"
            },
            text=text if text is not None else message
        )

    def json_response(
        self, exit_code: int, error_message: str, resource: str, start_time: float
    ) -> CliOutput:
        duration = round(time.time() - start_time, 2)
        return CliOutput(
            exit_code=exit_code,
            content={
                "code": exit_code,
                "success": False,
                "message": error_message,
                "resource": resource,
                "duration": f"{duration}s"
            },
            text=f"error: {error_message}"
        )


class ExitCode:
    # Success codes
    SUCCESS = 0

    # Semantic negative (not equal, not chiral, invalid graph)
    NEGATIVE = 1

    # Client error codes
    INPUT_ERROR = 2

    # Internal error codes
    INTERNAL_ERROR = 3
