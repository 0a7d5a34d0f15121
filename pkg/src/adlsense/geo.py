"""Great-circle distance of a GPS track within one acquisition window."""

import math
from dataclasses import dataclass

from .errors import ValidationError

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")


def haversine(a, b):
    """Great-circle distance between two points, in meters.

    Spherical Earth with radius 6,371,000 m. Symmetric and non-negative;
    sub-0.5% ellipsoidal error is irrelevant at window scale, where the
    feature only has to separate "moved" from "did not move".
    """
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = math.radians(b.lat - a.lat)
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def distance_traveled(track):
    """Sum of haversine distances over consecutive track points, in meters.

    Empty and single-point tracks travel 0 m. No noise gating is applied;
    the raw summation is the documented behaviour (a gating knob would sit
    here if one is ever needed).
    """
    total = 0.0
    for prev, cur in zip(track, track[1:]):
        total += haversine(prev, cur)
    return total
