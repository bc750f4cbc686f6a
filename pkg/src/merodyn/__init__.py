"""Desk-scale toolkit for iterating meromorphic maps of the plane."""

from .funcs import (DiskRegion, INFINITY, MeromorphicMap, ParseError, Pole,
                    SpherePoint, chordal, circle_modulus, compose,
                    disk_inversion, parse_expression, parse_map,
                    spherical_derivative)
from .orbits import (ItinerarySpec, LadderError, OrbitRecord, PingPongVerdict,
                     RadiusLadder, classify, detect_ping_pong,
                     follows_itinerary, is_fast_escaping, iterate,
                     itinerary_ladder, radius_ladder_outer)
from .julia import (PointCloud, RasterGrid, pole_backward_orbit, preimages,
                    probe_blowup, raster_agreement, render)
from .commute import (CommuteReport, check_commuting, julia_equality_experiment,
                      probe_lattice, shared_poles)
from .construct import (DiskConfig, EntireApprox, PolyPlusPole,
                        build_configuration, derive_epsilons, fit_entire,
                        fit_with_escalation, ping_pong_demo, thread_orbit,
                        verify_inclusions, verify_inequalities)

__version__ = "0.1.0"
