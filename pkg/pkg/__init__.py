from .response import (
    ExitCode,
    Response,
    success_json,
)

__all__ = [
    "ExitCode",
    "Response",
    "success_json",
]
