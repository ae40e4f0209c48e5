from __future__ import annotations


class KmacError(Exception):
    """Base class for errors raised by this package."""


class InvalidConfigError(KmacError, ValueError):
    """Bad parameters or malformed inputs."""


class DegenerateDataError(KmacError, ValueError):
    """The data make a quantity undefined (constant Y, identical X rows, ...)."""
