"""Exception hierarchy shared by all edgeprov subsystems.

Every error that a service surfaces over its API maps onto one of these
classes; the gateway translates them to HTTP status codes in one place.
"""

from __future__ import annotations


class EdgeProvError(Exception):
    """Base class for all edgeprov errors."""


# -- scenario / simulator ----------------------------------------------------

class SchemaError(EdgeProvError):
    """A scenario or fixture file is missing a field or has an ill-typed one."""


class BrokenReference(EdgeProvError):
    """An entity references another entity that does not exist."""


class TickMisaligned(EdgeProvError):
    """A time advance was not a positive multiple of the simulator tick."""


class UnknownFlow(EdgeProvError):
    pass


# -- core network (policy control) -------------------------------------------

class PolicyValidationError(EdgeProvError):
    """A QoS policy violates its own invariants (e.g. gbr > mbr)."""


class UnknownTarget(EdgeProvError):
    """A policy references a UE, slice or node that does not exist."""


class PolicyNotFound(EdgeProvError):
    pass


class UnknownUe(EdgeProvError):
    pass


# -- RIC ----------------------------------------------------------------------

class EmptySelector(EdgeProvError):
    """A subscription selector matched no current or declared flow."""


class BadPeriod(EdgeProvError):
    """Subscription period is not a multiple of the tick or is too small."""


class BadSubscription(EdgeProvError):
    """Subscription metric list is empty or names an unknown metric."""


class UnknownCell(EdgeProvError):
    pass


class UnknownSlice(EdgeProvError):
    pass


class OutOfRange(EdgeProvError):
    """A control request value is outside the permitted slice-config ranges."""


class SpecInvalid(EdgeProvError):
    """An xApp spec fails validation (nothing to monitor, bad parameters...)."""


class XAppNotFound(EdgeProvError):
    pass


# -- edge infrastructure -------------------------------------------------------

class DuplicateNode(EdgeProvError):
    pass


class InvalidNode(EdgeProvError):
    pass


class UnknownNode(EdgeProvError):
    pass


class InsufficientCapacity(EdgeProvError):
    pass


class NotServable(EdgeProvError):
    pass


class ServiceNotFound(EdgeProvError):
    pass


class ServiceUnavailable(EdgeProvError):
    """An inference request hit a service that is not in the running state."""


# -- model registry -------------------------------------------------------------

class BackendUnavailable(EdgeProvError):
    """The model hub could not be reached; callers may fall back to fixtures."""


class ModelNotFound(EdgeProvError):
    pass


class UnknownTask(EdgeProvError):
    """The fixture registry does not know the requested task tag at all."""


class NoCandidates(EdgeProvError):
    """Filtering removed every candidate model; surfaced conversationally."""


# -- agent ------------------------------------------------------------------------

class EmptyIntent(EdgeProvError):
    pass


class SessionNotFound(EdgeProvError):
    pass


class OutOfTurn(EdgeProvError):
    """A user message arrived while the agent is in a non-interactive stage."""


class NoFeasibleNode(EdgeProvError):
    pass


class CatalogViolation(EdgeProvError):
    """A planner proposed a network action outside the permissible catalog."""


class RemoteUnreachable(EdgeProvError):
    pass


class MalformedReply(EdgeProvError):
    """The remote planner kept returning replies that could not be parsed."""


# -- monitor -------------------------------------------------------------------------

class TooShort(EdgeProvError):
    """A time series is too short for the requested analysis."""


class BadParams(EdgeProvError):
    pass


class NoData(EdgeProvError):
    pass
