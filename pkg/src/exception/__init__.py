from .exception import (
    CustomException,
    FailException,
    InfeasibleException,
    InternalErrorException,
    NotFoundException,
    ValidateErrorException,
)

__all__ = [
    "CustomException",
    "FailException",
    "InfeasibleException",
    "InternalErrorException",
    "NotFoundException",
    "ValidateErrorException",
]
