"""Special-relativity primitives in 2+1 dimensions.

Events live in a flat (t, x, y) spacetime; boosts are restricted to the
x axis, which covers collinear device-motion layouts.  The module also
implements the two timing criteria that decide when a hidden-influence
model switches its nonlocal coordination off:

* finite-speed cut: the devices are farther apart than an influence at
  speed v can travel within the arrival-time difference,
* before-before: each receding device, in its own rest frame, makes its
  choice before the other's.

Both criteria are strict inequalities; ties count as coordination ON.
All functions are pure and accept an explicit speed of light ``c`` so
that c=1 unit systems work alongside SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Default absolute tolerance for the lightlike boundary of the squared
#: interval, intended for c=1 unit systems with O(1..1e3) coordinates.
LIGHTLIKE_ATOL = 1e-9


@dataclass(frozen=True)
class Event:
    """A point in 2+1-dimensional flat spacetime.

    t is in seconds, x and y in meters (or any consistent unit system
    when a non-SI ``c`` is passed to the operations below).
    """

    t: float
    x: float
    y: float = 0.0

    def __post_init__(self) -> None:
        for name in ("t", "x", "y"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"Event.{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Boost:
    """A velocity boost along the x axis, beta = v/c with |beta| < 1."""

    beta: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta) or abs(self.beta) >= 1.0:
            raise ValueError(f"|beta| must be < 1, got {self.beta!r}")

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.beta * self.beta)


@dataclass(frozen=True)
class TimingScenario:
    """Inputs of the two timing criteria.

    L: device separation (m); dt: |arrival-time difference| (s);
    v_bb: recession speed of each device in the lab frame (m/s);
    v: hidden-influence speed in the preferred frame (m/s, may exceed c).
    """

    L: float
    dt: float
    v_bb: float
    v: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if not (self.L > 0.0):
            raise ValueError(f"L must be > 0, got {self.L!r}")
        if not (self.dt >= 0.0):
            raise ValueError(f"dt must be >= 0, got {self.dt!r}")
        if not (0.0 <= self.v_bb < self.c):
            raise ValueError(f"v_bb must be in [0, c), got {self.v_bb!r}")
        if not (self.v > 0.0):
            raise ValueError(f"v must be > 0, got {self.v!r}")


def lorentz_boost(e: Event, b: Boost, c: float = SPEED_OF_LIGHT) -> Event:
    """Transform an event into the frame moving at b.beta along +x.

    t' = gamma (t - beta x / c), x' = gamma (x - beta c t), y' = y.
    """
    g = b.gamma
    return Event(
        t=g * (e.t - b.beta * e.x / c),
        x=g * (e.x - b.beta * c * e.t),
        y=e.y,
    )


def interval_squared(e1: Event, e2: Event, c: float = SPEED_OF_LIGHT) -> float:
    """Squared Minkowski interval c^2 dt^2 - dx^2 - dy^2 between two events."""
    dt = e2.t - e1.t
    dx = e2.x - e1.x
    dy = e2.y - e1.y
    return (c * dt) ** 2 - dx * dx - dy * dy


def interval_classify(
    e1: Event,
    e2: Event,
    c: float = SPEED_OF_LIGHT,
    atol: float = LIGHTLIKE_ATOL,
) -> str:
    """Classify the separation of two events.

    Returns "timelike", "lightlike" or "spacelike" by the sign of the
    squared interval.  |s2| within atol of zero counts as lightlike,
    with atol scaled by the magnitude of the squares being subtracted
    so that on-cone events classify as lightlike at any coordinate
    scale despite floating-point cancellation.
    """
    dt = e2.t - e1.t
    dx = e2.x - e1.x
    dy = e2.y - e1.y
    time_sq = (c * dt) ** 2
    space_sq = dx * dx + dy * dy
    s2 = time_sq - space_sq
    if abs(s2) <= atol * max(1.0, time_sq, space_sq):
        return "lightlike"
    return "timelike" if s2 > 0.0 else "spacelike"


def in_future_lightcone(
    source: Event,
    target: Event,
    c: float = SPEED_OF_LIGHT,
    atol: float = LIGHTLIKE_ATOL,
) -> bool:
    """True iff target lies on or inside the future lightcone of source."""
    if not target.t > source.t:
        return False
    return interval_classify(source, target, c=c, atol=atol) != "spacelike"


def before_before(s: TimingScenario) -> bool:
    """Criterion for two receding devices to each choose first in its own frame.

    True iff dt < (v_bb / c^2) L, strictly; v_bb = 0 can never satisfy it.
    """
    return s.dt < (s.v_bb / (s.c * s.c)) * s.L


def finite_speed_cut(s: TimingScenario) -> bool:
    """True iff the devices outrun a speed-v influence: L > v dt, strictly."""
    return s.L > s.v * s.dt


def equivalent_vbb(v: float, c: float = SPEED_OF_LIGHT) -> float:
    """Device recession speed whose before-before criterion matches speed v.

    Both criteria reduce to dt < L/v at v_bb = c^2 / v, so a before-before
    test at this recession speed also tests the finite-speed model at v.
    """
    if not (v > 0.0):
        raise ValueError(f"v must be > 0, got {v!r}")
    return c * c / v


def device_frame_order(
    local: Event,
    remote: Event,
    device_boost: Boost,
    c: float = SPEED_OF_LIGHT,
    atol: float = 0.0,
) -> str:
    """Temporal order of ``local`` relative to ``remote`` in the device frame.

    Returns "before" if the local event precedes the remote one after
    boosting both events by ``device_boost``, "after" if it follows, and
    "simultaneous" when the boosted times agree within ``atol`` seconds.
    """
    tl = lorentz_boost(local, device_boost, c=c).t
    tr = lorentz_boost(remote, device_boost, c=c).t
    if abs(tl - tr) <= atol:
        return "simultaneous"
    return "before" if tl < tr else "after"


def _bisector_gap(
    a: Event, b: Event, c_ev: Event, px: float, py: float, c: float
) -> float:
    """Advantage window at plane point (px, py): light-from-A arrival minus
    the earliest time inside both B and C future cones."""
    t_a = a.t + math.hypot(px - a.x, py - a.y) / c
    t_b = b.t + math.hypot(px - b.x, py - b.y) / c
    t_c = c_ev.t + math.hypot(px - c_ev.x, py - c_ev.y) / c
    return t_a - max(t_b, t_c)


def find_point_d(
    a: Event,
    b: Event,
    c_ev: Event,
    c: float = SPEED_OF_LIGHT,
    grid_points: int = 2001,
) -> tuple[Event, float] | None:
    """Find a point D inside the future cones of b and c_ev but outside a's.

    D is placed on the perpendicular bisector of the B-C spatial segment,
    at the earliest time contained in both future cones, so the returned
    ``advantage`` (seconds by which D beats a light signal sent from A to
    D's location) is the full window.  The spatial midpoint is tried
    first; failing that, the bisector is scanned over a bounded grid
    (10x the largest pairwise distance).  Returns None when no point on
    the bisector works.

    A degenerate spatially coincident B=C reduces to the two-event case:
    D sits at their common position, halfway through the time window.
    """
    bc_dx = c_ev.x - b.x
    bc_dy = c_ev.y - b.y
    bc_len = math.hypot(bc_dx, bc_dy)

    if bc_len == 0.0:
        # Two-event case: want max(t_b, t_c) < t_D < light-from-A arrival.
        t_open = max(b.t, c_ev.t)
        t_close = a.t + math.hypot(b.x - a.x, b.y - a.y) / c
        if not t_close > t_open:
            return None
        t_d = 0.5 * (t_open + t_close)
        return Event(t=t_d, x=b.x, y=b.y), t_close - t_d

    mx = 0.5 * (b.x + c_ev.x)
    my = 0.5 * (b.y + c_ev.y)
    # Unit direction along the bisector (perpendicular to B-C).
    ux = -bc_dy / bc_len
    uy = bc_dx / bc_len

    def candidate(s: float) -> tuple[float, float, float]:
        px = mx + s * ux
        py = my + s * uy
        return px, py, _bisector_gap(a, b, c_ev, px, py, c)

    px, py, gap = candidate(0.0)
    if gap <= 0.0:
        dists = (
            math.hypot(b.x - a.x, b.y - a.y),
            math.hypot(c_ev.x - a.x, c_ev.y - a.y),
            bc_len,
        )
        bound = 10.0 * max(dists)
        best = (gap, px, py)
        for i in range(grid_points):
            s = -bound + (2.0 * bound) * i / (grid_points - 1)
            qx, qy, g = candidate(s)
            if g > best[0]:
                best = (g, qx, qy)
        gap, px, py = best
        if gap <= 0.0:
            return None

    t_d = max(
        b.t + math.hypot(px - b.x, py - b.y) / c,
        c_ev.t + math.hypot(px - c_ev.x, py - c_ev.y) / c,
    )
    return Event(t=t_d, x=px, y=py), gap
