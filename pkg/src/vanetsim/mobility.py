"""Node placement and motion plans on a rectangular field.

Every node carries a full motion plan: an ordered list of constant-speed
legs. Because the plan is data rather than scheduled state, a node's
position is computable for any time, past or future, which is what lets
the radio model solve link-break times analytically.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

Point = tuple[float, float]


def distance(a: Point, b: Point) -> float:
    return math.dist(a, b)


@dataclass(frozen=True)
class FieldConfig:
    width: float = 3000.0
    height: float = 1600.0

    def contains(self, p: Point) -> bool:
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height


@dataclass
class MotionLeg:
    """One constant-speed straight segment of a node's plan."""

    start_t: float
    origin: Point
    dest: Point
    speed: float
    arrival_t: float

    def position_at(self, t: float) -> Point:
        if t <= self.start_t:
            return self.origin
        if t >= self.arrival_t:
            return self.dest
        frac = (t - self.start_t) / (self.arrival_t - self.start_t)
        return (
            self.origin[0] + (self.dest[0] - self.origin[0]) * frac,
            self.origin[1] + (self.dest[1] - self.origin[1]) * frac,
        )


class MobilityError(ValueError):
    pass


@dataclass
class _NodePlan:
    home: Point
    legs: list[MotionLeg] = field(default_factory=list)


class MobilityModel:
    """Placements plus per-node ordered motion legs."""

    def __init__(self, field_config: Optional[FieldConfig] = None):
        self.field = field_config or FieldConfig()
        self._plans: dict[int, _NodePlan] = {}
        # bumped on every added leg so cached motion analysis can detect
        # that previously computed link-break times went stale
        self.plan_version = 0

    def add_node(self, node_id: int, x: float, y: float) -> None:
        if node_id in self._plans:
            raise MobilityError(f"node {node_id} already placed")
        if not self.field.contains((x, y)):
            raise MobilityError(
                f"node {node_id} initial position ({x}, {y}) outside field"
            )
        self._plans[node_id] = _NodePlan(home=(x, y))

    def node_ids(self) -> list[int]:
        return sorted(self._plans)

    def legs(self, node_id: int) -> list[MotionLeg]:
        return list(self._plan(node_id).legs)

    def _plan(self, node_id: int) -> _NodePlan:
        try:
            return self._plans[node_id]
        except KeyError:
            raise MobilityError(f"unknown node {node_id}") from None

    def set_motion(
        self, node_id: int, dest: Point, speed: float, start_t: float
    ) -> float:
        """Append a leg; returns the arrival time.

        The leg must start at or after the previous leg's arrival so the
        plan stays a function of time.
        """
        plan = self._plan(node_id)
        if speed <= 0.0:
            raise MobilityError(f"node {node_id}: speed must be positive, got {speed}")
        if not self.field.contains(dest):
            raise MobilityError(f"node {node_id}: destination {dest} outside field")
        if plan.legs:
            earliest = plan.legs[-1].arrival_t
        else:
            earliest = 0.0
        if start_t < earliest:
            raise MobilityError(
                f"node {node_id}: leg at {start_t} overlaps previous leg "
                f"(earliest start {earliest})"
            )
        origin = self.position_at(node_id, start_t)
        arrival = start_t + distance(origin, dest) / speed
        plan.legs.append(MotionLeg(start_t, origin, tuple(dest), speed, arrival))
        self.plan_version += 1
        return arrival

    def position_at(self, node_id: int, t: float) -> Point:
        plan = self._plan(node_id)
        pos = plan.home
        for leg in plan.legs:
            if t <= leg.start_t:
                break
            pos = leg.position_at(t)
        return pos

    def velocity_at(self, node_id: int, t: float) -> Point:
        """Instantaneous velocity vector; leg boundaries take the later leg."""
        plan = self._plan(node_id)
        for leg in reversed(plan.legs):
            if leg.start_t <= t < leg.arrival_t:
                d = distance(leg.origin, leg.dest)
                if d == 0.0:
                    return (0.0, 0.0)
                return (
                    (leg.dest[0] - leg.origin[0]) / d * leg.speed,
                    (leg.dest[1] - leg.origin[1]) / d * leg.speed,
                )
        return (0.0, 0.0)

    def motion_breakpoints(self, node_id: int, from_t: float, to_t: float) -> list[float]:
        """Times in (from_t, to_t) where the node's velocity changes."""
        pts = []
        for leg in self._plan(node_id).legs:
            for t in (leg.start_t, leg.arrival_t):
                if from_t < t < to_t:
                    pts.append(t)
        return pts

    def random_waypoint_next(self, rng, v_min: float, v_max: float):
        """Draw the next waypoint: x, then y, then speed, zero pause.

        Returns (dest, speed); the caller appends the leg so draw order
        stays under scenario control.
        """
        x = rng.uniform(0.0, self.field.width)
        y = rng.uniform(0.0, self.field.height)
        if v_min == v_max:
            speed = v_min
        else:
            speed = rng.uniform(v_min, v_max)
        if speed <= 0.0:
            raise MobilityError("random waypoint speed range must be positive")
        return (x, y), speed
