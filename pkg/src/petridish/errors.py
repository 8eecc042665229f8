"""Exception hierarchy shared across the simulator.

Every error raised deliberately by this package derives from
:class:`SimulationError`, so callers embedding the simulator can catch one
type at the boundary.  Subclasses distinguish the three failure surfaces:
bad configuration, impossible world construction, and malformed runtime
input (actions, wire messages, trajectory files).
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SimulationError):
    """A configuration value violates a documented invariant."""


class WorldConstructionError(SimulationError):
    """Entity placement failed: the arena cannot hold the requested
    entity counts without overlap within the bounded retry budget."""


class InputError(SimulationError):
    """A runtime input (action command, player index, wire message) is
    malformed or references an unknown entity."""


class TrajectoryError(SimulationError):
    """A trajectory file is truncated, corrupt, or fails its hash check."""


class ProtocolError(SimulationError):
    """A session-server wire message cannot be decoded."""
