"""Orbit iteration, classification, ping-pong detection, and radius ladders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .funcs import INFINITY, MeromorphicMap, SpherePoint, circle_modulus

DEFAULT_ESCAPE_R = 1e6
DEFAULT_POLE_EPS = 1e-6
DEFAULT_WINDOW = 16

OUTER = "outer"
NEAR_POLE = "near-pole"

INF_BIT = "inf"
ZERO_BIT = "0"


class LadderError(ValueError):
    """A radius ladder failed its expansion or accumulation requirement."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


@dataclass
class OrbitRecord:
    """A finite forward orbit with per-step annotations.

    `points[0]` is the start; if the orbit reaches infinity the infinite
    entry is the last one and `infinity_step` records its index.
    """

    start: complex
    points: list[SpherePoint]
    terminal_event: str  # "completed" | "hit_infinity"
    infinity_step: Optional[int]
    annotations: list[Optional[str]]
    max_steps: int
    escape_R: float = DEFAULT_ESCAPE_R
    pole_eps: float = DEFAULT_POLE_EPS

    def moduli(self) -> list[float]:
        return [p.modulus() for p in self.points]

    def finite_moduli(self) -> list[float]:
        return [p.modulus() for p in self.points if not p.is_infinity]

    def to_csv_rows(self):
        rows = []
        for step, (p, ann) in enumerate(zip(self.points, self.annotations)):
            if p.is_infinity:
                rows.append((step, "", "", "inf", ann or ""))
            else:
                rows.append((step, repr(p.finite.real), repr(p.finite.imag),
                             repr(abs(p.finite)), ann or ""))
        return rows


def _annotate(z: complex, poles, pole_eps: float, escape_R: float) -> Optional[str]:
    for p in poles:
        if abs(z - p.location) < pole_eps:
            return NEAR_POLE
    if abs(z) > escape_R:
        return OUTER
    return None


def iterate(m: MeromorphicMap, z0: complex, max_steps: int,
            pole_eps: float = DEFAULT_POLE_EPS,
            escape_R: float = DEFAULT_ESCAPE_R) -> OrbitRecord:
    """Forward orbit of z0 under m, stopping at the first infinite image."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    z0 = complex(z0)
    points = [SpherePoint.of(z0)]
    annotations = [_annotate(z0, m.poles, pole_eps, escape_R)]
    terminal = "completed"
    infinity_step = None
    z = z0
    for step in range(1, max_steps + 1):
        w = m(z)
        if w.is_infinity:
            points.append(INFINITY)
            annotations.append(None)
            terminal = "hit_infinity"
            infinity_step = step
            break
        z = w.finite
        points.append(w)
        annotations.append(_annotate(z, m.poles, pole_eps, escape_R))
    return OrbitRecord(z0, points, terminal, infinity_step, annotations,
                       max_steps, escape_R, pole_eps)


BOUNDED = "bounded"
ESCAPING = "escaping"
BUNGEE_SUSPECT = "bungee-suspect"
HIT_POLE = "hit-pole"
UNDECIDED = "undecided"

CLASSIFY_LABELS = (BOUNDED, ESCAPING, BUNGEE_SUSPECT, HIT_POLE, UNDECIDED)


def classify(orbit: OrbitRecord, window: int = DEFAULT_WINDOW) -> str:
    """Deterministically assign exactly one orbit label.

    Orbits that reach infinity from a near-pole point are `hit-pole`;
    reaching infinity through the overflow guard while away from every
    declared pole counts as escaping.
    """
    if orbit.max_steps < 2 * window:
        raise ValueError("orbit was computed with max_steps < 2 * window")
    escape_R = orbit.escape_R
    if orbit.terminal_event == "hit_infinity":
        last_finite_ann = orbit.annotations[orbit.infinity_step - 1]
        return HIT_POLE if last_finite_ann == NEAR_POLE else ESCAPING
    mods = orbit.finite_moduli()
    tail = mods[-window:]
    if all(v > escape_R for v in tail) and all(a <= b for a, b in zip(tail, tail[1:])):
        return ESCAPING
    if all(v < escape_R for v in mods):
        return BOUNDED
    if any(v > escape_R for v in tail) and any(v < escape_R / 4 for v in tail):
        return BUNGEE_SUSPECT
    return UNDECIDED


@dataclass
class PingPongVerdict:
    detected: bool
    pole: Optional[complex] = None
    m_indices: tuple[int, ...] = ()
    n_indices: tuple[int, ...] = ()
    gap_bound: int = 0


def _greedy_chain(pole_hits: list[bool], escapes: list[bool],
                  M: int, K_min: int) -> Optional[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Earliest alternating chain m_1 < n_1 < m_2 < ... with bounded gaps."""
    length = len(pole_hits)
    start = 0
    while start < length:
        m_list: list[int] = []
        n_list: list[int] = []
        i = start
        while True:
            # next pole visit; after the first pair it must come within M of n_k
            lo = i
            hi = length if not n_list else min(length, n_list[-1] + M + 1)
            m = next((j for j in range(lo, hi) if pole_hits[j]), None)
            if m is None:
                break
            n = next((j for j in range(m + 1, min(length, m + M + 1)) if escapes[j]), None)
            if n is None:
                i = m + 1
                if not n_list:
                    continue
                break
            m_list.append(m)
            n_list.append(n)
            i = n + 1
        if len(m_list) >= K_min:
            return tuple(m_list), tuple(n_list)
        start = (n_list[-1] + 1) if n_list else length
    return None


def detect_ping_pong(orbit: OrbitRecord, poles: Sequence[complex],
                     delta: float, R_esc: float,
                     M: int = 4, K_min: int = 3) -> PingPongVerdict:
    """Greedy earliest-index detection of a finite ping-pong pattern.

    Detected iff some pole admits index sequences with |z - pole| < delta at
    the m's, |z| > R_esc at the n's, gaps bounded by M, and at least K_min
    alternations.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if K_min < 2:
        raise ValueError("K_min must be at least 2")
    escapes = [p.modulus() > R_esc for p in orbit.points]
    for pole in poles:
        pole = complex(pole)
        hits = [not p.is_infinity and abs(p.finite - pole) < delta for p in orbit.points]
        chain = _greedy_chain(hits, escapes, M, K_min)
        if chain is not None:
            return PingPongVerdict(True, pole, chain[0], chain[1], M)
    return PingPongVerdict(False, gap_bound=M)


# ---------------------------------------------------------------------------
# Radius ladders
# ---------------------------------------------------------------------------

@dataclass
class RadiusLadder:
    """Radius sequence for fast-escape or essential-itinerary membership tests."""

    radii: tuple[float, ...]
    c: float
    mode: str  # "outer" | "itinerary"
    itinerary: Optional[tuple[str, ...]] = None

    def __len__(self):
        return len(self.radii)


@dataclass(frozen=True)
class ItinerarySpec:
    """A finite {0, inf} itinerary with a lag offset."""

    bits: tuple[str, ...]
    lag: int = 0

    def __post_init__(self):
        if not self.bits:
            raise ValueError("itinerary must be nonempty")
        if self.lag < 0:
            raise ValueError("lag must be nonnegative")
        for b in self.bits:
            if b not in (INF_BIT, ZERO_BIT):
                raise ValueError(f"itinerary bits must be '{INF_BIT}' or '{ZERO_BIT}'")

    def shifted(self, k: int) -> "ItinerarySpec":
        k %= len(self.bits)
        return ItinerarySpec(self.bits[k:] + self.bits[:k], self.lag)


def radius_ladder_outer(m: MeromorphicMap, R1: float, c: float, n: int,
                        n_samples: int = 4096) -> RadiusLadder:
    """Radii R_{k+1} = c * M(R_k / 2, f), strictly increasing or an error."""
    if R1 <= 0 or c <= 0 or n < 1:
        raise ValueError("R1, c must be positive and n >= 1")
    for p in m.poles:
        if abs(p.location) >= R1 / 2:
            raise LadderError(f"pole {p.location} is not inside |z| < R1/2")
    radii = [float(R1)]
    for k in range(1, n):
        big, _ = circle_modulus(m, radii[-1] / 2, n_samples)
        nxt = c * big
        if not math.isfinite(nxt):
            raise LadderError(f"ladder overflowed at index {k}", index=k)
        if nxt <= radii[-1]:
            raise LadderError(
                f"non-expanding ladder at index {k}: c*M(R/2) = {nxt} <= {radii[-1]}",
                index=k)
        radii.append(nxt)
    return RadiusLadder(tuple(radii), c, "outer")


@dataclass
class FastEscapeResult:
    is_fast: bool
    lag: Optional[int]
    event: Optional[str] = None

    def __iter__(self):
        return iter((self.is_fast, self.lag))


def is_fast_escaping(m: MeromorphicMap, z: complex, ladder: RadiusLadder,
                     max_lag: int, pole_eps: float = DEFAULT_POLE_EPS) -> FastEscapeResult:
    """Circle-exterior surrogate test for fast-escape membership.

    True with the smallest lag l <= max_lag such that |f^(n+l)(z)| >= radii[n]
    for every rung; an orbit that lands on a pole first is reported false
    with the event noted.
    """
    if ladder.mode != "outer":
        raise ValueError("ladder must be in outer mode")
    depth = len(ladder) + max_lag
    orbit = iterate(m, z, depth, pole_eps=pole_eps, escape_R=ladder.radii[0])
    if orbit.terminal_event == "hit_infinity" and \
            orbit.annotations[orbit.infinity_step - 1] == NEAR_POLE:
        return FastEscapeResult(False, None, event="hit-pole")
    mods = orbit.moduli()  # infinity counts as above every rung
    ends_at_infinity = orbit.terminal_event == "hit_infinity"
    for lag in range(max_lag + 1):
        ok = True
        for n, rung in enumerate(ladder.radii, start=1):
            idx = n + lag
            if idx >= len(mods):
                # past an overflow-to-infinity tail every rung is cleared
                ok = ends_at_infinity
                break
            if mods[idx] < rung:
                ok = False
                break
        if ok:
            return FastEscapeResult(True, lag)
    return FastEscapeResult(False, None)


def itinerary_ladder(m: MeromorphicMap, spec: ItinerarySpec, R: float,
                     n_samples: int = 4096) -> RadiusLadder:
    """Radii driven by an essential itinerary: R_1 = R (or 1/R) then sampled
    maximum/minimum modulus according to each bit."""
    if R <= 0:
        raise ValueError("R must be positive")
    radii = [float(R) if spec.bits[0] == INF_BIT else 1.0 / R]
    for bit in spec.bits[1:]:
        big, small = circle_modulus(m, radii[-1], n_samples)
        radii.append(big if bit == INF_BIT else small)
    for idx, (bit, r) in enumerate(zip(spec.bits, radii)):
        if bit == INF_BIT and r < R:
            raise LadderError(
                f"itinerary ladder fails to accumulate: R_{idx + 1} = {r} < {R}",
                index=idx)
        if bit == ZERO_BIT and r > 1.0 / R:
            raise LadderError(
                f"itinerary ladder fails to accumulate: R_{idx + 1} = {r} > 1/{R}",
                index=idx)
    return RadiusLadder(tuple(radii), 1.0, "itinerary", itinerary=spec.bits)


def follows_itinerary(orbit: OrbitRecord, ladder: RadiusLadder, lag: int) -> bool:
    """Componentwise comparison of orbit moduli against an itinerary ladder."""
    if ladder.mode != "itinerary":
        raise ValueError("ladder must be in itinerary mode")
    mods = orbit.moduli()
    if len(mods) < len(ladder.radii) + lag:
        raise ValueError("orbit too short for the ladder at this lag")
    for n, (bit, rung) in enumerate(zip(ladder.itinerary, ladder.radii)):
        v = mods[n + lag]
        if bit == INF_BIT and not v >= rung:
            return False
        if bit == ZERO_BIT and not v <= rung:
            return False
    return True
