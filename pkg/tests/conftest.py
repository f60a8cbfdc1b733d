import math

import pytest

from ffrsim.grid import GeneratorParams, GridModel
from ffrsim.resources import FfrResource, ResourceClass


def two_unit_grid(h_fleet=4.0, droop_r=0.05, gov_time_const=5.0, deadband=0.0, headroom=1.0,
                  damping=1.0, trip_output=0.01, inertia_scale=1.0):
    """One governed unit plus one tripping unit, both on a 100 MVA base.

    The tripping unit carries no inertia worth mentioning, so the post-trip
    inertia is exactly ``h_fleet`` seconds.
    """
    fleet = GeneratorParams("G1", 100.0, h_fleet, droop_r, gov_time_const, deadband, headroom, 0.5)
    trip = GeneratorParams("G2", 100.0, 1e-6, 0.05, 5.0, 0.0, 0.0, trip_output)
    return GridModel((fleet, trip), 100.0, 60.0, damping, inertia_scale)


def lag_resource(rid="lag", tau=0.0, lag=0.2, p_max=1.0, energy=100.0, gain=1.0, ramp=math.inf,
                 kind=ResourceClass.BESS, availability=1.0):
    return FfrResource(rid, kind, tau, p_max, energy, availability, gain, lag, ramp, 0.0)


@pytest.fixture
def grid_small():
    return two_unit_grid()
