"""Numerical reproduction of a pole-plus-entire wandering-domain construction.

Builds the truncated disk configuration, fits an entire (polynomial)
approximation by least squares as a stand-in for an abstract approximation
theorem, verifies the target inequalities and image inclusions by dense
sampling, and threads orbits through prescribed compact-set sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .funcs import (DiskRegion, INFINITY, MeromorphicMap, Pole, SpherePoint,
                    disk_inversion)
from .orbits import OrbitRecord, PingPongVerdict, detect_ping_pong, iterate

DEFAULT_MAX_DEGREE = 256
DEFAULT_DENSITY = 64
INCLUSION_DENSITY = 256


class ConfigError(ValueError):
    pass


class FitError(ValueError):
    pass


class ThreadingError(ValueError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class PatternBreakError(ValueError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


# ---------------------------------------------------------------------------
# Disk configuration
# ---------------------------------------------------------------------------

@dataclass
class DiskConfig:
    """Truncated compact-set family: unit disk, A_m, B_m, B_plus, B_minus."""

    R: float
    k: tuple[float, ...]
    A: list[DiskRegion]
    B: list[DiskRegion]
    B_plus: DiskRegion
    B_minus: DiskRegion
    unit_disk: DiskRegion
    eps: list[float] = field(default_factory=list)
    overlaps: list[tuple[str, str]] = field(default_factory=list)

    @property
    def truncation(self) -> int:
        return len(self.k)

    def named_regions(self) -> list[tuple[str, DiskRegion]]:
        out = [("unit_disk", self.unit_disk), ("B_plus", self.B_plus),
               ("B_minus", self.B_minus)]
        out += [(f"A_{m + 1}", d) for m, d in enumerate(self.A)]
        out += [(f"B_{m + 1}", d) for m, d in enumerate(self.B)]
        return out


def _disjoint_closures(a: DiskRegion, b: DiskRegion) -> bool:
    return abs(a.center - b.center) > a.radius + b.radius


def build_configuration(R: float, k: Sequence[float]) -> DiskConfig:
    """Validate the radius/center constraints and assemble the disk family.

    Pairs of disks with intersecting closures are recorded in `overlaps`
    rather than rejected; the geometry is only guaranteed disjoint when R
    is small against the gap between B_plus and the first disk center.
    """
    if R <= 0:
        raise ConfigError("R must be positive")
    k = tuple(float(v) for v in k)
    if len(k) < 2:
        raise ConfigError("need at least two centers")
    for m, km in enumerate(k, start=1):
        if not km > 2.5:
            raise ConfigError(f"k_{m} = {km} violates k_m > 5/2")
    for m in range(len(k) - 1):
        if not k[m + 1] > k[m] + 3 * R:
            raise ConfigError(
                f"k_{m + 2} = {k[m + 1]} violates k_{m + 2} > k_{m + 1} + 3R "
                f"(index {m + 1})")
    A = [DiskRegion(complex(km), R) for km in k]
    B = [DiskRegion(complex((k[m + 1] + k[m]) / 2), R / 4) for m in range(len(k) - 1)]
    config = DiskConfig(
        R=R, k=k, A=A, B=B,
        B_plus=DiskRegion(2 + 0j, 0.25, closed=True),
        B_minus=DiskRegion(-5 + 0j, 1.0, closed=True),
        unit_disk=DiskRegion(0j, 1.0, closed=True),
    )
    names = config.named_regions()
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            if not _disjoint_closures(names[i][1], names[j][1]):
                config.overlaps.append((names[i][0], names[j][0]))
    config.eps = derive_epsilons(config)
    return config


def derive_epsilons(config: DiskConfig) -> list[float]:
    """Half the closed-form containment margins for each eps_m.

    eps_m must keep B(1/k_{m+1}, eps_m) inside 1/A_{m+1} and the inverse
    disk 1/B(1/k_{m+1}, eps_m) inside B(k_{m+1}, R/4); both margins follow
    from disk geometry on the real axis.
    """
    eps = []
    for m in range(len(config.k) - 1):
        kn = config.k[m + 1]
        a = 1.0 / kn
        inv_A = disk_inversion(config.A[m + 1])
        gap_inside = inv_A.radius - abs(a - inv_A.center)
        # 1/B(a, eps) = [1/(a+eps), 1/(a-eps)] must stay in [kn - R/4, kn + R/4]
        gap_left = a - 1.0 / (kn + config.R / 4)
        gap_right = 1.0 / (kn - config.R / 4) - a
        margin = min(gap_inside, gap_left, gap_right)
        if margin <= 0:
            raise ConfigError(f"no positive eps margin at m = {m + 1}")
        eps.append(0.5 * margin)
    return eps


def target_value(config: DiskConfig, z: complex) -> Optional[complex]:
    """Pointwise target for the entire part g, by region membership.

    Regions are tried in the order A_m, then B_plus and the B_m, then the
    unit disk, then B_minus; None when z lies in no region.
    """
    z = complex(z)
    for m in range(len(config.A) - 1):
        if config.A[m].contains(z):
            return 1.0 / config.k[m + 1] - 1.0 / z
    if config.B_plus.contains(z) or any(b.contains(z) for b in config.B):
        return 2.0 - 1.0 / z
    if config.unit_disk.contains(z):
        return 0j
    if config.B_minus.contains(z):
        return z + 5.0 - 1.0 / z
    return None


# ---------------------------------------------------------------------------
# Polynomial fit
# ---------------------------------------------------------------------------

@dataclass
class EntireApprox:
    """Polynomial (entire) approximation in an orthonormalized basis.

    The basis polynomials q_0, ..., q_d are generated by the Arnoldi
    recurrence s q_k = sum_j H[j, k] q_j on the fit samples (s = z scaled
    by basis_scale); a plain monomial basis loses all accuracy past degree
    a few dozen in double precision, the orthonormalized one does not.
    `coefficients[k]` multiplies q_k.
    """

    coefficients: np.ndarray  # complex, ascending basis index
    basis_scale: float
    fit_report: dict[str, float]  # region name -> max validation residual
    hessenberg: np.ndarray = None  # (d+1, d) recurrence matrix

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def _basis(self, s: np.ndarray) -> np.ndarray:
        n = self.degree
        W = np.zeros((len(s), n + 1), dtype=complex)
        W[:, 0] = 1.0
        H = self.hessenberg
        for k in range(n):
            w = s * W[:, k] - W[:, :k + 1] @ H[:k + 1, k]
            W[:, k + 1] = w / H[k + 1, k]
        return W

    def eval_array(self, zs: np.ndarray) -> np.ndarray:
        s = np.asarray(zs, dtype=complex).ravel() / self.basis_scale
        out = self._basis(s) @ self.coefficients
        return out.reshape(np.shape(zs))

    def __call__(self, z: complex) -> complex:
        return complex(self.eval_array(np.array([complex(z)]))[0])

    def derivative_array(self, zs: np.ndarray) -> np.ndarray:
        """d/dz of the polynomial, by differentiating the recurrence."""
        s = np.asarray(zs, dtype=complex).ravel() / self.basis_scale
        n = self.degree
        H = self.hessenberg
        W = np.zeros((len(s), n + 1), dtype=complex)
        D = np.zeros_like(W)
        W[:, 0] = 1.0
        for k in range(n):
            W[:, k + 1] = (s * W[:, k] - W[:, :k + 1] @ H[:k + 1, k]) / H[k + 1, k]
            D[:, k + 1] = (W[:, k] + s * D[:, k]
                           - D[:, :k + 1] @ H[:k + 1, k]) / H[k + 1, k]
        out = (D @ self.coefficients) / self.basis_scale
        return out.reshape(np.shape(zs))

    def derivative_at(self, z: complex) -> complex:
        return complex(self.derivative_array(np.array([complex(z)]))[0])


def _region_samples(region: DiskRegion, boundary: int, interior: int,
                    offset: float = 0.0) -> np.ndarray:
    """Deterministic boundary circle plus polar interior lattice.

    Angles start at `offset` turns so a validation set can be made disjoint
    from the fit set; all sets are conjugate-symmetric for real centers.
    """
    pts = [region.center + region.radius * np.exp(2j * np.pi * (k + offset) / boundary)
           for k in range(boundary)]
    rings = max(2, int(math.isqrt(interior)))
    per_ring = max(8, interior // rings)
    for j in range(1, rings + 1):
        rho = region.radius * (j - 0.5 + offset) / rings
        for a in range(per_ring):
            pts.append(region.center + rho * np.exp(2j * np.pi * (a + offset) / per_ring))
    return np.asarray(pts, dtype=complex)


def _target_array(config: DiskConfig, region_name: str, zs: np.ndarray) -> np.ndarray:
    out = np.empty(len(zs), dtype=complex)
    for i, z in enumerate(zs):
        t = _region_target(config, region_name, complex(z))
        out[i] = t
    return out


def _region_target(config: DiskConfig, region_name: str, z: complex) -> complex:
    if region_name.startswith("A_"):
        m = int(region_name[2:])
        return 1.0 / config.k[m] - 1.0 / z
    if region_name == "B_plus" or region_name.startswith("B_"):
        if region_name == "B_minus":
            return z + 5.0 - 1.0 / z
        return 2.0 - 1.0 / z
    return 0j


def _fit_regions(config: DiskConfig) -> list[tuple[str, DiskRegion]]:
    regions = [(f"A_{m + 1}", config.A[m]) for m in range(len(config.A) - 1)]
    regions += [(f"B_{m + 1}", d) for m, d in enumerate(config.B)]
    regions += [("B_plus", config.B_plus), ("unit_disk", config.unit_disk),
                ("B_minus", config.B_minus)]
    return regions


def region_bound(config: DiskConfig, region_name: str) -> float:
    if region_name.startswith("A_") and region_name != "A_plus":
        m = int(region_name[2:])
        return config.eps[m - 1]
    if region_name == "unit_disk":
        return config.R / 4
    if region_name == "B_minus":
        return 0.5
    return 0.2  # B_plus and the B_m share the 1/5 bound


def _arnoldi(s: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal polynomial basis on the samples s, by Arnoldi iteration."""
    m = len(s)
    Q = np.zeros((m, degree + 1), dtype=complex)
    Q[:, 0] = 1.0
    H = np.zeros((degree + 1, degree), dtype=complex)
    for k in range(degree):
        q = s * Q[:, k]
        col = (Q[:, :k + 1].conj().T @ q) / m
        q = q - Q[:, :k + 1] @ col
        H[:k + 1, k] = col
        H[k + 1, k] = np.linalg.norm(q) / math.sqrt(m)
        if H[k + 1, k] == 0:
            raise FitError(f"basis degenerated at degree {k + 1}")
        Q[:, k + 1] = q / H[k + 1, k]
    return Q, H


def fit_entire(config: DiskConfig, degree: int,
               samples_per_region: int = 200) -> EntireApprox:
    """Least-squares polynomial matching the region targets.

    Fits over boundary-and-interior samples in an Arnoldi-orthonormalized
    basis (scaled by k_max), then reports per-region max residuals on a
    disjoint validation set.
    """
    if degree < 0:
        raise FitError("degree must be nonnegative")
    scale = max(config.k)
    regions = _fit_regions(config)
    boundary = max(16, 3 * samples_per_region)
    interior = max(16, (3 * samples_per_region) // 2)
    zs_list, ts_list = [], []
    for name, region in regions:
        zs = _region_samples(region, boundary, interior)
        zs_list.append(zs)
        ts_list.append(_target_array(config, name, zs))
    zs = np.concatenate(zs_list)
    ts = np.concatenate(ts_list)
    if len(zs) < degree + 1:
        raise FitError(f"rank-deficient normal system: {len(zs)} samples "
                       f"for {degree + 1} coefficients, condition estimate inf")
    Q, H = _arnoldi(zs / scale, degree)
    coeffs, _, _, _ = np.linalg.lstsq(Q, ts, rcond=None)
    approx = EntireApprox(coeffs, scale, {}, H)
    for name, region in regions:
        vz = _region_samples(region, boundary, interior, offset=0.5)
        resid = np.abs(approx.eval_array(vz) - _target_array(config, name, vz))
        approx.fit_report[name] = float(np.max(resid))
    return approx


@dataclass
class InequalityReport:
    per_region: dict[str, tuple[float, float, bool]]  # name -> (max_lhs, bound, ok)

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok in self.per_region.values())


def verify_inequalities(config: DiskConfig, approx: EntireApprox,
                        density: int = DEFAULT_DENSITY) -> InequalityReport:
    """Sup-norm check of every bound family on a dense sample grid.

    `density` controls the interior lattice (about density^2 points per
    region); the boundary circle gets 8x density samples since residual
    maxima sit on the boundary.
    """
    report = {}
    for name, region in _fit_regions(config):
        zs = _region_samples(region, 8 * density, density * density)
        lhs = np.abs(approx.eval_array(zs) - _target_array(config, name, zs))
        bound = region_bound(config, name)
        mx = float(np.max(lhs))
        report[name] = (mx, bound, mx < bound)
    return InequalityReport(report)


# ---------------------------------------------------------------------------
# The meromorphic map f(z) = g(z) + 1/z for a fitted g
# ---------------------------------------------------------------------------

class PolyPlusPole:
    """f(z) = g(z) + 1/z with polynomial g; single declared pole at 0."""

    def __init__(self, approx: EntireApprox, label: str = "g(z)+1/z"):
        self.approx = approx
        self.poles = (Pole(0j, 1),)
        self.label = label

    def __call__(self, z: complex) -> SpherePoint:
        z = complex(z)
        if z == 0:
            return INFINITY
        try:
            w = self.approx(z) + 1.0 / z
        except (OverflowError, ZeroDivisionError):
            return INFINITY
        if not (math.isfinite(w.real) and math.isfinite(w.imag)) or abs(w) > 1e150:
            return INFINITY
        return SpherePoint(w)

    def eval_array(self, zs: np.ndarray) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex)
        with np.errstate(all="ignore"):
            w = self.approx.eval_array(zs) + 1.0 / zs
        bad = ~np.isfinite(w.real) | ~np.isfinite(w.imag) | (np.abs(w) > 1e150)
        return np.where(bad, complex(np.inf, 0.0), w)

    def derivative(self) -> "_PolyPlusPoleDerivative":
        return _PolyPlusPoleDerivative(self.approx)


class _PolyPlusPoleDerivative:
    def __init__(self, approx: EntireApprox):
        self.approx = approx
        self.poles = (Pole(0j, 2),)

    def __call__(self, z: complex) -> SpherePoint:
        z = complex(z)
        if z == 0:
            return INFINITY
        w = self.approx.derivative_at(z) - 1.0 / (z * z)
        if not (math.isfinite(w.real) and math.isfinite(w.imag)) or abs(w) > 1e150:
            return INFINITY
        return SpherePoint(w)


@dataclass
class InclusionReport:
    per_inclusion: dict[str, tuple[bool, float]]  # name -> (ok, worst margin)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.per_inclusion.values())


def _inclusion_check(f: PolyPlusPole, source: DiskRegion, target: DiskRegion,
                     density: int, iterations: int = 1) -> tuple[bool, float]:
    zs = _region_samples(source, density, density)
    w = zs
    for _ in range(iterations):
        w = f.eval_array(w)
    dist = np.abs(w - target.center)
    worst = float(np.max(dist))
    ok = bool(np.all(np.isfinite(dist)) and worst < target.radius)
    return ok, target.radius - worst


def verify_inclusions(config: DiskConfig, approx: EntireApprox,
                      density: int = INCLUSION_DENSITY) -> InclusionReport:
    """Sample-wise image-membership tests for f = g + 1/z."""
    f = PolyPlusPole(approx)
    report = {}
    for m in range(len(config.A) - 1):
        inv_next = disk_inversion(config.A[m + 1])
        report[f"f(A_{m + 1}) in 1/A_{m + 2}"] = _inclusion_check(
            f, config.A[m], inv_next, density)
        report[f"f^2(A_{m + 1}) in A_{m + 2}"] = _inclusion_check(
            f, config.A[m], config.A[m + 1], density, iterations=2)
    report["f(B_plus) in B_plus"] = _inclusion_check(f, config.B_plus,
                                                     config.B_plus, density)
    for m, b in enumerate(config.B):
        report[f"f(B_{m + 1}) in B_plus"] = _inclusion_check(f, b, config.B_plus,
                                                             density)
    return InclusionReport(report)


def fit_with_escalation(config: DiskConfig, max_degree: int = DEFAULT_MAX_DEGREE,
                        density: int = DEFAULT_DENSITY,
                        start_degree: int = 8) -> tuple[EntireApprox, InequalityReport]:
    """Double the fit degree until the sup-norm verification passes.

    Returns the best attempt and its report; the caller decides whether a
    failing report is acceptable.
    """
    degree = start_degree
    best: Optional[tuple[EntireApprox, InequalityReport, float]] = None
    while True:
        approx = fit_entire(config, degree)
        report = verify_inequalities(config, approx, density)
        worst_excess = max(mx / bound for mx, bound, _ in report.per_region.values())
        if best is None or worst_excess < best[2]:
            best = (approx, report, worst_excess)
        if report.passed or degree >= max_degree:
            if report.passed:
                return approx, report
            return best[0], best[1]
        degree = min(2 * degree, max_degree)


# ---------------------------------------------------------------------------
# Orbit threading and the ping-pong demo
# ---------------------------------------------------------------------------

def _newton_in_region(f, target: complex, region: DiskRegion,
                      tol: float = 1e-12, max_steps: int = 80) -> Optional[complex]:
    """Newton-solve f(z) = target from deterministic seeds in the region;
    returns the converged solution closest to the region center."""
    deriv = f.derivative()
    seeds = [region.center]
    for frac in (0.35, 0.7):
        for a in range(8):
            seeds.append(region.center
                         + frac * region.radius * np.exp(2j * np.pi * a / 8))
    solutions = []
    for seed in seeds:
        z = complex(seed)
        converged = False
        for _ in range(max_steps):
            fv = f(z)
            dv = deriv(z)
            if fv.is_infinity or dv.is_infinity or dv.finite == 0:
                break
            step = (fv.finite - target) / dv.finite
            z = z - step
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                break
            if abs(step) < tol * max(1.0, abs(z)):
                converged = True
                break
        if not converged:
            continue
        if abs(z - region.center) <= region.radius:
            fv = f(z)
            if not fv.is_infinity and abs(fv.finite - target) <= 1e-6 * max(1.0, abs(target)):
                solutions.append(z)
    if not solutions:
        return None
    return min(solutions, key=lambda s: abs(s - region.center))


def thread_orbit(f, regions: Sequence[DiskRegion], tol: float) -> complex:
    """Backward-thread a start point whose orbit visits the given regions.

    Picks the final region's center and pulls it back region by region via
    Newton, always choosing the preimage closest to the earlier region's
    center; the result is verified forward (distance to each center at most
    the region radius, within tol) and threading failures raise with the
    offending step.
    """
    regions = list(regions)
    if len(regions) < 2:
        raise ValueError("need at least two regions")
    target = regions[-1].center
    for idx in range(len(regions) - 2, -1, -1):
        z = _newton_in_region(f, target, regions[idx])
        if z is None:
            raise ThreadingError(
                f"no preimage of {target} found inside region {idx} "
                f"(center {regions[idx].center}, radius {regions[idx].radius})",
                step=idx)
        target = z
    z0 = target
    w: complex = z0
    for n, region in enumerate(regions):
        if abs(w - region.center) > region.radius + tol:
            raise ThreadingError(
                f"forward verification failed at step {n}: "
                f"|f^{n}(z0) - {region.center}| = {abs(w - region.center)} "
                f"> {region.radius}", step=n)
        if n < len(regions) - 1:
            fw = f(w)
            if fw.is_infinity:
                raise ThreadingError(f"orbit left the sphere's finite part at step {n}",
                                     step=n)
            w = fw.finite
    return z0


def annotate_demo_region(config: DiskConfig, z: complex) -> Optional[str]:
    for m, d in enumerate(config.A):
        if d.contains(z):
            return f"A_{m + 1}"
    for m, d in enumerate(config.A):
        if m == 0:
            continue
        if disk_inversion(d).contains(z):
            return f"1/A_{m + 1}"
    return None


def expected_demo_pattern(truncation: int, steps: int) -> list[str]:
    pattern = []
    m = 1
    while len(pattern) < steps + 1:
        pattern.append(f"A_{m}")
        if len(pattern) > steps:
            break
        if m + 1 > truncation:
            raise PatternBreakError(
                f"pattern break: no A_{m + 1} exists in a truncation of depth "
                f"{truncation}", step=len(pattern))
        pattern.append(f"1/A_{m + 1}")
        m += 1
    return pattern[:steps + 1]


def ping_pong_demo(config: DiskConfig, approx: EntireApprox, steps: int,
                   detector_K_min: int = 2) -> tuple[OrbitRecord, list[str], PingPongVerdict]:
    """Iterate f from k_1 and check the alternating region pattern.

    Returns the orbit, the per-step region annotations, and the ping-pong
    verdict for the pole at the origin with thresholds read off the
    configuration geometry.
    """
    expected = expected_demo_pattern(config.truncation, steps)
    f = PolyPlusPole(approx)
    orbit = iterate(f, complex(config.k[0]), steps,
                    pole_eps=1e-9, escape_R=config.k[1] - config.R)
    labels = []
    for n, p in enumerate(orbit.points):
        if p.is_infinity:
            raise PatternBreakError(f"orbit reached infinity at step {n}", step=n)
        labels.append(annotate_demo_region(config, p.finite))
    for n, (got, want) in enumerate(zip(labels, expected)):
        if got != want:
            raise PatternBreakError(
                f"pattern break at step {n}: expected {want}, point "
                f"{orbit.points[n].finite} lies in {got}", step=n)
    delta = 2.0 * max(disk_inversion(d).sup_modulus for d in config.A[1:])
    verdict = detect_ping_pong(orbit, [0j], delta=delta,
                               R_esc=config.k[1] - config.R, M=4,
                               K_min=detector_K_min)
    return orbit, labels, verdict
