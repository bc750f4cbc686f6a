"""Pointwise commuting checks and desk-scale Julia-equality experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .funcs import INFINITY, MeromorphicMap, SpherePoint, chordal
from .julia import RasterGrid, Window, raster_agreement, render
from .orbits import DEFAULT_ESCAPE_R, DEFAULT_POLE_EPS, DEFAULT_WINDOW

COMMUTE_POLE_EPS = 1e-6


class CommuteProbeError(ValueError):
    """The commuting probe failed before a Julia comparison."""


@dataclass
class Violation:
    index: int
    z: complex
    fg: SpherePoint
    gf: SpherePoint
    discrepancy: float


@dataclass
class CommuteReport:
    pairs_tested: int
    max_discrepancy: float
    both_undefined_count: int
    excluded_near_pole: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _apply(m: MeromorphicMap, p: SpherePoint) -> SpherePoint:
    # a meromorphic map of the plane is undefined at infinity
    if p.is_infinity:
        return INFINITY
    return m(p.finite)


def _near_pole(z: complex, maps: Sequence[MeromorphicMap], eps: float) -> bool:
    return any(abs(z - p.location) < eps for m in maps for p in m.poles)


def check_commuting(f: MeromorphicMap, g: MeromorphicMap,
                    samples: Sequence[complex], tol: float,
                    pole_eps: float = COMMUTE_POLE_EPS) -> CommuteReport:
    """Compare f(g(z)) against g(f(z)) over a sample set, chordally.

    Samples within pole_eps of a declared pole of either map are excluded
    from the discrepancy statistics and counted separately; a pair where
    both compositions are undefined counts as agreement.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    report = CommuteReport(0, 0.0, 0, 0)
    for index, z in enumerate(samples):
        z = complex(z)
        if _near_pole(z, (f, g), pole_eps):
            report.excluded_near_pole += 1
            continue
        report.pairs_tested += 1
        fg = _apply(f, g(z))
        gf = _apply(g, f(z))
        if fg.is_infinity and gf.is_infinity:
            report.both_undefined_count += 1
            continue
        d = chordal(fg, gf)
        if d > report.max_discrepancy:
            report.max_discrepancy = d
        if d > tol:
            report.violations.append(Violation(index, z, fg, gf, d))
    report.violations.sort(key=lambda v: v.index)
    return report


@dataclass
class SharedPolesReport:
    shared: bool
    only_f: list[complex]
    only_g: list[complex]


def shared_poles(f: MeromorphicMap, g: MeromorphicMap,
                 tol: float = 1e-12) -> SharedPolesReport:
    """True iff the declared pole locations coincide within tol."""
    f_locs = [p.location for p in f.poles]
    g_locs = [p.location for p in g.poles]
    only_f = [p for p in f_locs if all(abs(p - q) > tol for q in g_locs)]
    only_g = [q for q in g_locs if all(abs(q - p) > tol for p in f_locs)]
    return SharedPolesReport(not only_f and not only_g, only_f, only_g)


def probe_lattice(window: Window, side: int) -> list[complex]:
    """Deterministic side x side lattice of cell centers over the window."""
    re_min, re_max, im_min, im_max = window
    dx = (re_max - re_min) / side
    dy = (im_max - im_min) / side
    return [complex(re_min + (i + 0.5) * dx, im_min + (j + 0.5) * dy)
            for j in range(side) for i in range(side)]


def julia_equality_experiment(f: MeromorphicMap, g: MeromorphicMap,
                              window: Window, width: int, height: int,
                              max_steps: int,
                              escape_R: float = DEFAULT_ESCAPE_R,
                              pole_eps: float = DEFAULT_POLE_EPS,
                              window_steps: int = DEFAULT_WINDOW,
                              probe_side: int = 32, probe_tol: float = 1e-9,
                              workers: int = 1) -> tuple[RasterGrid, RasterGrid, float]:
    """Render both maps' rasters and report their agreement.

    Requires the commuting probe to pass first; reports agreement only,
    never a claim about equality of the actual Julia sets.
    """
    probe = check_commuting(f, g, probe_lattice(window, probe_side), probe_tol)
    if not probe.passed:
        worst = probe.violations[0]
        raise CommuteProbeError(
            f"commuting probe failed at z = {worst.z} "
            f"(discrepancy {worst.discrepancy:.3e})")
    ra = render(f, window, width, height, max_steps, escape_R, pole_eps,
                window_steps, workers)
    rb = render(g, window, width, height, max_steps, escape_R, pole_eps,
                window_steps, workers)
    return ra, rb, raster_agreement(ra, rb)
