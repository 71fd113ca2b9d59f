from .exit_code import ExitCode
from .response import Response, success_json

__all__ = ["ExitCode", "Response", "success_json"]
