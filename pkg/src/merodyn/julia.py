"""Julia-set surrogates: preimage clouds, escape-time rasters, blow-up probes."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .funcs import INFINITY, MeromorphicMap, SpherePoint, chordal
from .orbits import (BOUNDED, BUNGEE_SUSPECT, DEFAULT_ESCAPE_R, DEFAULT_POLE_EPS,
                     DEFAULT_WINDOW, ESCAPING, HIT_POLE, UNDECIDED, classify, iterate)

MERGE_TOL = 1e-9
NEWTON_TOL = 1e-12
NEWTON_MAX_STEPS = 50
ACCEPT_CHORDAL = 1e-9

LABEL_ESCAPING = "escaping"
LABEL_BOUNDED = "bounded"
LABEL_NEAR_POLE = "near-pole"
LABEL_UNDECIDED = "undecided"

PGM_GRAY = {LABEL_ESCAPING: 255, LABEL_BOUNDED: 0,
            LABEL_NEAR_POLE: 128, LABEL_UNDECIDED: 64}

Window = tuple[float, float, float, float]  # (re_min, re_max, im_min, im_max)


class RasterShapeError(ValueError):
    pass


@dataclass
class PointCloud:
    """Finite point set with per-point generation depth; 1e-9 merge tolerance."""

    points: list[complex]
    generations: list[int]

    @property
    def generation(self) -> int:
        return max(self.generations, default=0)

    def merged_add(self, z: complex, generation: int) -> bool:
        for q in self.points:
            if abs(q - z) <= MERGE_TOL:
                return False
        self.points.append(z)
        self.generations.append(generation)
        return True

    def to_csv_rows(self):
        order = sorted(range(len(self.points)),
                       key=lambda i: (self.generations[i], self.points[i].real,
                                      self.points[i].imag))
        return [(repr(self.points[i].real), repr(self.points[i].imag),
                 self.generations[i]) for i in order]


def _in_window(z: complex, window: Window) -> bool:
    re_min, re_max, im_min, im_max = window
    return re_min <= z.real <= re_max and im_min <= z.imag <= im_max


def newton_solve(m: MeromorphicMap, w: complex, seed: complex,
                 tol: float = NEWTON_TOL, max_steps: int = NEWTON_MAX_STEPS,
                 deriv: Optional[MeromorphicMap] = None) -> Optional[complex]:
    """Newton iteration for f(z) = w from one seed; None on divergence."""
    if deriv is None:
        deriv = m.derivative()
    z = complex(seed)
    for _ in range(max_steps):
        fv = m(z)
        dv = deriv(z)
        if fv.is_infinity or dv.is_infinity or dv.finite == 0:
            return None
        step = (fv.finite - w) / dv.finite
        z = z - step
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return None
        if abs(step) < tol * max(1.0, abs(z)):
            return z
    return None


def preimages(m: MeromorphicMap, w, window: Window,
              seed_density: int = 32) -> PointCloud:
    """Newton-refined solutions of f(z) = w inside a rectangular window.

    For w = infinity the declared poles intersected with the window are
    returned.  Seed grid of seed_density^2 cell centers; divergent seeds are
    discarded; accepted points satisfy chordal(f(z), w) < 1e-9.
    """
    cloud = PointCloud([], [])
    if isinstance(w, SpherePoint) and w.is_infinity:
        for p in sorted(m.poles, key=lambda p: (p.location.real, p.location.imag)):
            if _in_window(p.location, window):
                cloud.merged_add(p.location, 1)
        return cloud
    w = w.finite if isinstance(w, SpherePoint) else complex(w)
    re_min, re_max, im_min, im_max = window
    deriv = m.derivative()
    dx = (re_max - re_min) / seed_density
    dy = (im_max - im_min) / seed_density
    for iy in range(seed_density):
        for ix in range(seed_density):
            seed = complex(re_min + (ix + 0.5) * dx, im_min + (iy + 0.5) * dy)
            z = newton_solve(m, w, seed, deriv=deriv)
            if z is None or not _in_window(z, window):
                continue
            fv = m(z)
            if chordal(fv, w) < ACCEPT_CHORDAL:
                cloud.merged_add(z, 1)
    return cloud


def pole_backward_orbit(m: MeromorphicMap, depth: int, window: Window,
                        seed_density: int = 32) -> PointCloud:
    """Union of iterated pole preimages up to `depth` generations."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    cloud = preimages(m, INFINITY, window, seed_density)
    frontier = list(cloud.points)
    for generation in range(2, depth + 1):
        next_frontier = []
        for target in frontier:
            found = preimages(m, target, window, seed_density)
            for z in found.points:
                if cloud.merged_add(z, generation):
                    next_frontier.append(z)
        frontier = next_frontier
        if not frontier:
            break
    return cloud


# ---------------------------------------------------------------------------
# Escape-time rasters
# ---------------------------------------------------------------------------

@dataclass
class RasterGrid:
    """Row-major classification grid; row 0 sits at the top (largest Im)."""

    window: Window
    width: int
    height: int
    cells: list[str]

    def __post_init__(self):
        re_min, re_max, im_min, im_max = self.window
        if not (re_min < re_max and im_min < im_max):
            raise ValueError("window must be well-ordered")
        if len(self.cells) != self.width * self.height:
            raise RasterShapeError("cells length must equal width*height")

    def cell_center(self, row: int, col: int) -> complex:
        re_min, re_max, im_min, im_max = self.window
        dx = (re_max - re_min) / self.width
        dy = (im_max - im_min) / self.height
        return complex(re_min + (col + 0.5) * dx, im_max - (row + 0.5) * dy)

    def to_pgm(self, header_lines: Sequence[str] = ()) -> str:
        lines = ["P2"]
        lines += [f"# {h}" for h in header_lines]
        lines.append(f"{self.width} {self.height}")
        lines.append("255")
        for row in range(self.height):
            vals = self.cells[row * self.width:(row + 1) * self.width]
            lines.append(" ".join(str(PGM_GRAY[v]) for v in vals))
        return "\n".join(lines) + "\n"

    def to_csv_rows(self):
        return [(row, col, self.cells[row * self.width + col])
                for row in range(self.height) for col in range(self.width)]


_CLASSIFY_TO_RASTER = {
    ESCAPING: LABEL_ESCAPING,
    BOUNDED: LABEL_BOUNDED,
    HIT_POLE: LABEL_NEAR_POLE,
    BUNGEE_SUSPECT: LABEL_UNDECIDED,  # raster keeps 4 labels only
    UNDECIDED: LABEL_UNDECIDED,
}


def _classify_cell(m: MeromorphicMap, z: complex, max_steps: int, escape_R: float,
                   pole_eps: float, window_steps: int) -> str:
    orbit = iterate(m, z, max_steps, pole_eps=pole_eps, escape_R=escape_R)
    return _CLASSIFY_TO_RASTER[classify(orbit, window_steps)]


def _render_rows(args):
    m, window, width, height, rows, max_steps, escape_R, pole_eps, window_steps = args
    re_min, re_max, im_min, im_max = window
    dx = (re_max - re_min) / width
    dy = (im_max - im_min) / height
    out = []
    for row in rows:
        im = im_max - (row + 0.5) * dy
        labels = [_classify_cell(m, complex(re_min + (col + 0.5) * dx, im),
                                 max_steps, escape_R, pole_eps, window_steps)
                  for col in range(width)]
        out.append((row, labels))
    return out


def render(m: MeromorphicMap, window: Window, width: int, height: int,
           max_steps: int, escape_R: float = DEFAULT_ESCAPE_R,
           pole_eps: float = DEFAULT_POLE_EPS,
           window_steps: int = DEFAULT_WINDOW, workers: int = 1) -> RasterGrid:
    """Classify every cell center; deterministic for any worker count."""
    all_rows = list(range(height))
    if workers <= 1:
        chunks = [_render_rows((m, window, width, height, all_rows, max_steps,
                                escape_R, pole_eps, window_steps))]
    else:
        blocks = [all_rows[i::workers] for i in range(workers)]
        tasks = [(m, window, width, height, block, max_steps, escape_R,
                  pole_eps, window_steps) for block in blocks if block]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_render_rows, tasks))
    cells: list[Optional[str]] = [None] * (width * height)
    for chunk in chunks:
        for row, labels in chunk:
            cells[row * width:(row + 1) * width] = labels
    return RasterGrid(window, width, height, cells)  # type: ignore[arg-type]


def raster_agreement(a: RasterGrid, b: RasterGrid) -> float:
    """Fraction of cells carrying equal labels; grids must be congruent."""
    if a.window != b.window or a.width != b.width or a.height != b.height:
        raise RasterShapeError("rasters have different window or dimensions")
    same = sum(1 for x, y in zip(a.cells, b.cells) if x == y)
    return same / len(a.cells)


# ---------------------------------------------------------------------------
# Blowing-up probe
# ---------------------------------------------------------------------------

def _disk_samples(z: complex, r: float, rings: int, spokes: int) -> np.ndarray:
    """Deterministic polar lattice of the closed disk, boundary-biased."""
    pts = [z]
    for j in range(1, rings + 1):
        rho = r * j / rings
        count = spokes if j == rings else max(8, (spokes * j) // rings)
        ang = 2.0 * np.pi * np.arange(count) / count
        pts.extend(z + rho * np.exp(1j * ang))
    return np.asarray(pts, dtype=complex)


def _forward(m: MeromorphicMap, zs: np.ndarray, n: int) -> np.ndarray:
    w = zs.astype(complex)
    for _ in range(n):
        w = m.eval_array(w)
    return w


def _chordal_to(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Chordal distance, broadcasting image array w against target array t."""
    aw = np.abs(w)
    finite = np.isfinite(aw)
    ht = np.hypot(1.0, np.abs(t))
    num = np.abs(np.where(finite, w, 0) - t)
    return np.where(finite,
                    2.0 * num / (np.hypot(1.0, np.where(finite, aw, 0)) * ht),
                    2.0 / (ht * np.ones_like(aw)))


def _clamp_to_disk(cand: np.ndarray, z: complex, r: float) -> np.ndarray:
    off = cand - z
    mag = np.abs(off)
    scale = np.where(mag > r, r / np.maximum(mag, 1e-300), 1.0)
    return z + off * scale


def probe_blowup(m: MeromorphicMap, z: complex, r: float,
                 K: Sequence[complex], N: int,
                 tol: float = 1e-3, rings: int = 24, spokes: int = 192,
                 refine_rounds: int = 48) -> list[float]:
    """Forward-sampling coverage probe of f^n(B(z, r)) against targets K.

    For each n = 1..N, returns the fraction of K hit within chordal `tol`.
    A coarse polar lattice gives candidate preimages; unresolved targets are
    then chased by a shrinking 3x3 pattern search inside the disk (adaptive
    refinement, boundary-clamped).  Coverage is a lower bound on covering.
    """
    if N == 0:
        return []
    z = complex(z)
    targets = np.asarray([complex(w) for w in K], dtype=complex)
    base = _disk_samples(z, r, rings, spokes)
    offsets = np.array([complex(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)])
    coverage = []
    images = base.copy()
    for n in range(1, N + 1):
        images = m.eval_array(images)
        dmat = _chordal_to(images[None, :], targets[:, None])
        best_idx = np.argmin(dmat, axis=1)
        best_d = dmat[np.arange(len(targets)), best_idx]
        active = np.flatnonzero(best_d >= tol)
        centers = base[best_idx[active]]
        steps = np.full(len(active), r / rings)
        act_d = best_d[active].copy()
        for _ in range(refine_rounds):
            live = np.flatnonzero(act_d >= tol)
            if len(live) == 0:
                break
            cand = centers[live, None] + steps[live, None] * offsets[None, :]
            cand = _clamp_to_disk(cand, z, r)
            w = _forward(m, cand.reshape(-1), n).reshape(len(live), 9)
            dc = _chordal_to(w, targets[active[live], None])
            j = np.argmin(dc, axis=1)
            dj = dc[np.arange(len(live)), j]
            improved = dj < act_d[live]
            upd = live[improved]
            act_d[upd] = dj[improved]
            centers[upd] = cand[improved, j[improved]]
            steps[live[~improved]] *= 0.5
        best_d[active] = act_d
        coverage.append(float(np.count_nonzero(best_d < tol)) / len(targets))
    return coverage
