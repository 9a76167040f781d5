"""Exception types and the fault taxonomy shared by every module."""

import enum


class FaultClass(enum.Enum):
    UnmappedId = "UnmappedId"
    OobWrite = "OobWrite"
    LargeAllocation = "LargeAllocation"
    InvalidFree = "InvalidFree"
    IdExhaustion = "IdExhaustion"


class FrpError(Exception):
    """Base class for memory-safety faults raised by the simulator."""

    fault = None


class UnmappedId(FrpError):
    fault = FaultClass.UnmappedId


class OobWrite(FrpError):
    fault = FaultClass.OobWrite


class LargeAllocation(FrpError):
    fault = FaultClass.LargeAllocation


class InvalidFree(FrpError):
    fault = FaultClass.InvalidFree


class IdExhaustion(FrpError):
    fault = FaultClass.IdExhaustion


class EntropySourceError(RuntimeError):
    """The operating system entropy source could not be read."""
