"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: parse problems exit 2, physics-contract
violations exit 3, engine-accuracy failures exit 1.
"""
from __future__ import annotations


class PhysicsContractError(ValueError):
    """An operation was asked to violate a physical precondition
    (e.g. modal evolution with a gate outside the scale-invariant family,
    or a trigger conditioned on a superposed control)."""


class EngineAccuracyError(RuntimeError):
    """A numerical engine detected that its result is not trustworthy at the
    requested resolution."""


class ScheduleParseError(ValueError):
    """A schedule/program/gate document could not be parsed."""
