from enum import Enum


class Approach(str, Enum):
    """The arm of the intersection a vehicle arrives from."""

    N = "N"
    S = "S"
    E = "E"
    W = "W"

    @property
    def opposite(self) -> "Approach":
        return _OPPOSITE[self]


_OPPOSITE = {
    Approach.N: Approach.S,
    Approach.S: Approach.N,
    Approach.E: Approach.W,
    Approach.W: Approach.E,
}


class Movement(str, Enum):
    """
    Turning movement of a traffic stream.

    Attributes:
        L: left turn
        C: through movement
        R: right turn
    """

    L = "L"
    C = "C"
    R = "R"


class DirectionMode(str, Enum):
    """
    How many streams are controlled. Right turns are only controlled streams in the twelve direction mode; in the
    eight direction mode they carry no traffic.
    """

    EIGHT = "8-direction"
    TWELVE = "12-direction"

    @property
    def directions(self) -> int:
        return 8 if self == DirectionMode.EIGHT else 12


class VehicleKind(str, Enum):
    """Robot (policy controlled) or human driven vehicle."""

    RV = "RV"
    HV = "HV"


class Zone(str, Enum):
    """
    Where a vehicle is relative to the intersection. Transitions only ever move forward in the order listed.
    """

    UPSTREAM = "upstream"
    CONTROL_ZONE = "control_zone"
    INSIDE = "inside"
    EXITED = "exited"

    @property
    def rank(self) -> int:
        return _ZONE_RANK[self]


_ZONE_RANK = {
    Zone.UPSTREAM: 0,
    Zone.CONTROL_ZONE: 1,
    Zone.INSIDE: 2,
    Zone.EXITED: 3,
}


class Action(str, Enum):
    """The two actions a robot vehicle chooses between. The index is the network output slot."""

    STOP = "stop"
    GO = "go"

    @property
    def index(self) -> int:
        return 0 if self == Action.STOP else 1

    @classmethod
    def from_index(cls, index: int) -> "Action":
        if index == 0:
            return cls.STOP
        if index == 1:
            return cls.GO
        raise ValueError(f"action index must be 0 or 1, got {index}")


class ArrivalModel(str, Enum):
    POISSON = "poisson"
    UNIFORM = "uniform"


class StatsSource(str, Enum):
    """
    Where the per-direction queue length and waiting time of an observation come from.

    Attributes:
        GROUND_TRUTH: read directly from the simulated world
        V2V: aggregated from ego estimates shared over the simulated vehicle-to-vehicle network
    """

    GROUND_TRUTH = "ground_truth"
    V2V = "v2v"


class Protocol(str, Enum):
    """
    V2V link model.

    Attributes:
        LONG_RANGE: every pair within range of the intersection centre talks directly in one hop
        SHORT_RANGE: vehicles cluster per direction behind a master node and relay over up to three hops
    """

    LONG_RANGE = "long_range"
    SHORT_RANGE = "short_range"


class ControllerKind(str, Enum):
    """
    Which controller gates entry into the intersection.

    Attributes:
        TL: fixed-time traffic lights
        NOTL: no traffic lights, every vehicle enters once its first conflict zone is clear
        POLICY: robot vehicles decide with the learned policy, human drivers follow the NOTL rule
    """

    TL = "tl"
    NOTL = "notl"
    POLICY = "policy"


class EventKind(str, Enum):
    BLACKOUT = "blackout"
    RV_DROP = "rv_drop"


class EventType(str, Enum):
    """Kinds of entries in the per-step event list of a run log."""

    SPAWN = "spawn"
    ENTER = "enter"
    EXIT = "exit"
    CONFLICT = "conflict"
    DECISION = "decision"
    SAFETY = "safety"
    SCENARIO = "scenario"


class SweepAxis(str, Enum):
    DEMAND = "demand"
    RV_RATE = "rv_rate"
    PER = "per"


class WaitingTimeMode(str, Enum):
    """
    How a vehicle's waiting time is read.

    Attributes:
        ACCUMULATED: sum of every still interval inside the control zone
        LONGEST: the longest single still interval
    """

    ACCUMULATED = "accumulated"
    LONGEST = "longest"
