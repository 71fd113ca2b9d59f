from .logging_extension import init_logging

__all__ = ["init_logging"]
