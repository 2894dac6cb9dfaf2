"""Output writers."""

from .export import dumps_json, write_csv, write_json

__all__ = ["dumps_json", "write_csv", "write_json"]
