from typing import Dict, Tuple

VehicleId = int
StepIndex = int

# [start, end] in meters along one path
Interval = Tuple[float, float]

# (stream label, lane index) identifies one inner path
PathKey = Tuple[str, int]

# (sender, receiver) -> hop count, unreachable pairs absent
LinkMap = Dict[Tuple[VehicleId, VehicleId], int]
