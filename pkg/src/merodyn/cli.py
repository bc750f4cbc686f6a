"""Command-line front end: run configurations, emit reports, rasters, CSVs.

Usage: merodyn COMMAND --config PATH --out DIR [--workers N] [--no-figures]

The config is a JSON object holding the parameters of the chosen command;
unknown keys are rejected.  Every run writes report.txt plus per-command
CSV/PGM artifacts and PNG figures into the output directory, along with a
config echo for reproducibility.  Exit status: 0 on pass, 1 when the
analysis itself is negative (a violation, a failed verification, a false
verdict), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import construct, figures, reporting
from .commute import (CommuteProbeError, check_commuting,
                      julia_equality_experiment, probe_lattice)
from .funcs import MeromorphicMap, DiskRegion, ParseError, parse_map
from .julia import pole_backward_orbit, render
from .orbits import (DEFAULT_ESCAPE_R, DEFAULT_POLE_EPS, DEFAULT_WINDOW,
                     ItinerarySpec, LadderError, classify, follows_itinerary,
                     is_fast_escaping, iterate, itinerary_ladder,
                     radius_ladder_outer)

EXIT_PASS = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


class AnalysisNegative(Exception):
    """The pipeline ran but its verdict is negative."""


# required=... marks keys without defaults
_REQUIRED = object()

_SCHEMAS = {
    "classify": {"map": _REQUIRED, "z0": _REQUIRED, "max_steps": 200,
                 "escape_R": DEFAULT_ESCAPE_R, "pole_eps": DEFAULT_POLE_EPS,
                 "window": DEFAULT_WINDOW},
    "ladder": {"map": _REQUIRED, "R1": _REQUIRED, "c": 1.0, "n": 3,
               "n_samples": 4096},
    "fast-escape": {"map": _REQUIRED, "z0": _REQUIRED, "R1": _REQUIRED,
                    "c": 1.0, "n": 3, "n_samples": 4096, "max_lag": 4,
                    "pole_eps": DEFAULT_POLE_EPS},
    "render": {"map": _REQUIRED, "window": _REQUIRED, "width": 256,
               "height": 256, "max_steps": 100, "escape_R": DEFAULT_ESCAPE_R,
               "pole_eps": DEFAULT_POLE_EPS, "window_steps": DEFAULT_WINDOW},
    "backward": {"map": _REQUIRED, "depth": 2, "window": _REQUIRED,
                 "seed_density": 32},
    "commute": {"f": _REQUIRED, "g": _REQUIRED, "window": (-4.0, 4.0, -4.0, 4.0),
                "side": 32, "tol": 1e-9, "pole_eps": 1e-6},
    "julia-compare": {"f": _REQUIRED, "g": _REQUIRED,
                      "window": (-4.0, 4.0, -4.0, 4.0), "width": 64,
                      "height": 64, "max_steps": 60,
                      "escape_R": DEFAULT_ESCAPE_R,
                      "pole_eps": DEFAULT_POLE_EPS,
                      "window_steps": DEFAULT_WINDOW, "probe_side": 32,
                      "probe_tol": 1e-9},
    "construct": {"R": _REQUIRED, "k": _REQUIRED, "max_degree": 256,
                  "start_degree": 8, "density": 64, "inclusion_density": 256},
    "thread": {"map": _REQUIRED, "regions": _REQUIRED, "tol": _REQUIRED,
               "max_steps_report": 64},
    "itinerary": {"map": _REQUIRED, "bits": _REQUIRED, "R": _REQUIRED,
                  "lag": 0, "n_samples": 4096, "z0": None, "orbit_steps": 32},
    "ping-pong-demo": {"R": _REQUIRED, "k": _REQUIRED, "steps": 4,
                       "max_degree": 256, "start_degree": 8, "K_min": 2},
}


def _resolve_config(command: str, raw: dict) -> dict:
    schema = _SCHEMAS[command]
    for key in raw:
        if key not in schema:
            raise UsageError(f"unknown config key: {key}")
    resolved = {}
    for key, default in schema.items():
        if key in raw:
            resolved[key] = raw[key]
        elif default is _REQUIRED:
            raise UsageError(f"missing required config key: {key}")
        else:
            resolved[key] = list(default) if isinstance(default, tuple) else default
    resolved["command"] = command
    return resolved


def _as_map(value, field: str) -> MeromorphicMap:
    if not isinstance(value, dict) or "expression" not in value:
        raise UsageError(f"{field} must be an object with an 'expression' key")
    extra = set(value) - {"expression", "poles", "label"}
    if extra:
        raise UsageError(f"unknown key in {field}: {sorted(extra)[0]}")
    poles = [(complex(p[0], p[1]), int(p[2])) for p in value.get("poles", [])]
    try:
        return parse_map(value["expression"], poles, value.get("label"))
    except ParseError as e:
        raise UsageError(f"{field}: {e} (position {e.position})")


def _as_complex(value, field: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise UsageError(f"{field} must be a number or [re, im] pair")


def _as_window(value, field: str = "window"):
    if not (isinstance(value, (list, tuple)) and len(value) == 4):
        raise UsageError(f"{field} must be [re_min, re_max, im_min, im_max]")
    return tuple(float(v) for v in value)


class Emitter:
    """Collects report lines and writes all artifacts with shared headers."""

    def __init__(self, out_dir: str, config: dict, want_figures: bool):
        self.out = out_dir
        self.config = config
        self.want_figures = want_figures
        self.lines: list[str] = []

    def say(self, line: str) -> None:
        self.lines.append(line)
        print(line)

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def csv(self, name: str, fields, rows) -> None:
        reporting.write_csv(self.path(name), self.config, fields, rows)

    def pgm(self, name: str, raster) -> None:
        reporting.write_pgm(self.path(name), self.config, raster)

    def finish(self) -> None:
        reporting.write_report(self.path("report.txt"), self.config, self.lines)
        with open(self.path("config.json"), "w") as fh:
            json.dump(self.config, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _orbit_csv(em: Emitter, name: str, orbit) -> None:
    em.csv(name, ("step", "re", "im", "modulus", "annotation"),
           orbit.to_csv_rows())


# ---------------------------------------------------------------------------
# Command handlers; each returns None (pass) or raises AnalysisNegative
# ---------------------------------------------------------------------------

def _run_classify(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    orbit = iterate(m, _as_complex(cfg["z0"], "z0"), cfg["max_steps"],
                    cfg["pole_eps"], cfg["escape_R"])
    label = classify(orbit, cfg["window"])
    _orbit_csv(em, "orbit.csv", orbit)
    if em.want_figures:
        figures.save_orbit_figure(orbit, em.path("orbit.png"))
    em.say(f"classification: {label}")
    em.say(f"terminal event: {orbit.terminal_event}")


def _ladder_csv(em, ladder):
    rows = [(i + 1, repr(r)) for i, r in enumerate(ladder.radii)]
    em.csv("ladder.csv", ("rung", "radius"), rows)
    if em.want_figures:
        figures.save_ladder_figure(ladder, em.path("ladder.png"))


def _run_ladder(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    try:
        ladder = radius_ladder_outer(m, cfg["R1"], cfg["c"], cfg["n"],
                                     cfg["n_samples"])
    except LadderError as e:
        em.say(f"ladder failed: {e}")
        raise AnalysisNegative(str(e))
    _ladder_csv(em, ladder)
    for i, r in enumerate(ladder.radii, start=1):
        em.say(f"R_{i} = {r!r}")


def _run_fast_escape(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    ladder = radius_ladder_outer(m, cfg["R1"], cfg["c"], cfg["n"],
                                 cfg["n_samples"])
    _ladder_csv(em, ladder)
    result = is_fast_escaping(m, _as_complex(cfg["z0"], "z0"), ladder,
                              cfg["max_lag"], cfg["pole_eps"])
    if result.is_fast:
        em.say(f"fast-escaping: true (lag {result.lag})")
    else:
        em.say("fast-escaping: false"
               + (f" (event {result.event})" if result.event else ""))
        raise AnalysisNegative("not fast-escaping at any tested lag")


def _run_render(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    raster = render(m, _as_window(cfg["window"]), cfg["width"], cfg["height"],
                    cfg["max_steps"], cfg["escape_R"], cfg["pole_eps"],
                    cfg["window_steps"], workers)
    em.pgm("julia.pgm", raster)
    em.csv("julia.csv", ("row", "col", "re", "im", "label"),
           raster.to_csv_rows())
    if em.want_figures:
        figures.save_raster_figure(raster, em.path("julia.png"))
    counts = {}
    for c in raster.cells:
        counts[c] = counts.get(c, 0) + 1
    for label in sorted(counts):
        em.say(f"cells {label}: {counts[label]}")


def _run_backward(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    cloud = pole_backward_orbit(m, cfg["depth"], _as_window(cfg["window"]),
                                cfg["seed_density"])
    em.csv("cloud.csv", ("re", "im", "generation"), cloud.to_csv_rows())
    if em.want_figures:
        figures.save_cloud_figure(cloud.points, cloud.generations,
                                  em.path("cloud.png"))
    em.say(f"backward orbit points: {len(cloud.points)}")


def _run_commute(cfg, em, workers):
    f = _as_map(cfg["f"], "f")
    g = _as_map(cfg["g"], "g")
    samples = probe_lattice(_as_window(cfg["window"]), cfg["side"])
    report = check_commuting(f, g, samples, cfg["tol"], cfg["pole_eps"])
    em.csv("violations.csv", ("index", "re", "im", "fg", "gf", "discrepancy"),
           reporting.violations_rows(report.violations))
    em.say(f"pairs tested: {report.pairs_tested}")
    em.say(f"excluded near poles: {report.excluded_near_pole}")
    em.say(f"both undefined: {report.both_undefined_count}")
    em.say(f"max discrepancy: {report.max_discrepancy!r}")
    em.say(f"violations: {len(report.violations)}")
    if not report.passed:
        raise AnalysisNegative("commuting violations found")


def _run_julia_compare(cfg, em, workers):
    f = _as_map(cfg["f"], "f")
    g = _as_map(cfg["g"], "g")
    try:
        ra, rb, agreement = julia_equality_experiment(
            f, g, _as_window(cfg["window"]), cfg["width"], cfg["height"],
            cfg["max_steps"], cfg["escape_R"], cfg["pole_eps"],
            cfg["window_steps"], cfg["probe_side"], cfg["probe_tol"], workers)
    except CommuteProbeError as e:
        em.say(f"probe failed: {e}")
        raise AnalysisNegative(str(e))
    em.pgm("julia_f.pgm", ra)
    em.pgm("julia_g.pgm", rb)
    if em.want_figures:
        figures.save_raster_figure(ra, em.path("julia_f.png"))
        figures.save_raster_figure(rb, em.path("julia_g.png"))
    em.say(f"raster agreement: {agreement!r}")
    em.say("note: agreement of escape-time rasters only, "
           "not a claim about the Julia sets")


def _construct_common(cfg, em):
    config = construct.build_configuration(cfg["R"], cfg["k"])
    for name, region in config.named_regions():
        em.say(f"region {name}: center {region.center}, radius {region.radius}")
    for m, eps in enumerate(config.eps, start=1):
        em.say(f"eps_{m} = {eps!r}")
    for a, b in config.overlaps:
        em.say(f"overlap warning: {a} and {b} have intersecting closures")
    approx, report = construct.fit_with_escalation(
        config, cfg["max_degree"], cfg.get("density", 64), cfg["start_degree"])
    em.say(f"fit degree: {approx.degree}")
    em.csv("coefficients.csv", ("index", "re", "im"),
           reporting.coefficients_rows(approx.coefficients))
    if em.want_figures:
        figures.save_residual_figure(approx.fit_report,
                                     em.path("residuals.png"))
    for name in sorted(report.per_region):
        mx, bound, ok = report.per_region[name]
        em.say(f"bound {name}: max {mx!r} vs {bound!r} "
               f"({'ok' if ok else 'FAIL'})")
    return config, approx, report


def _run_construct(cfg, em, workers):
    config, approx, report = _construct_common(cfg, em)
    if not report.passed:
        raise AnalysisNegative("inequality verification failed")
    inc = construct.verify_inclusions(config, approx, cfg["inclusion_density"])
    for name in sorted(inc.per_inclusion):
        ok, margin = inc.per_inclusion[name]
        em.say(f"inclusion {name}: {'ok' if ok else 'FAIL'} "
               f"(margin {margin!r})")
    if not inc.passed:
        raise AnalysisNegative("inclusion verification failed")


def _run_thread(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    regions = []
    for i, spec in enumerate(cfg["regions"]):
        if not (isinstance(spec, (list, tuple)) and len(spec) == 3):
            raise UsageError(f"regions[{i}] must be [center_re, center_im, radius]")
        regions.append(DiskRegion(complex(spec[0], spec[1]), float(spec[2])))
    try:
        z0 = construct.thread_orbit(m, regions, cfg["tol"])
    except construct.ThreadingError as e:
        em.say(f"threading failed at step {e.step}: {e}")
        raise AnalysisNegative(str(e))
    em.say(f"threaded start point: {z0!r}")
    orbit = iterate(m, z0, len(regions) - 1)
    _orbit_csv(em, "orbit.csv", orbit)
    if em.want_figures:
        figures.save_orbit_figure(orbit, em.path("orbit.png"))


def _run_itinerary(cfg, em, workers):
    m = _as_map(cfg["map"], "map")
    spec = ItinerarySpec(tuple(cfg["bits"]), cfg["lag"])
    try:
        ladder = itinerary_ladder(m, spec, cfg["R"], cfg["n_samples"])
    except LadderError as e:
        em.say(f"itinerary ladder failed: {e}")
        raise AnalysisNegative(str(e))
    _ladder_csv(em, ladder)
    for i, r in enumerate(ladder.radii, start=1):
        em.say(f"R_{i} = {r!r}")
    if cfg["z0"] is not None:
        orbit = iterate(m, _as_complex(cfg["z0"], "z0"),
                        max(cfg["orbit_steps"], len(ladder.radii) + spec.lag))
        follows = follows_itinerary(orbit, ladder, spec.lag)
        _orbit_csv(em, "orbit.csv", orbit)
        em.say(f"orbit follows itinerary at lag {spec.lag}: {follows}")
        if not follows:
            raise AnalysisNegative("orbit does not follow the itinerary")


def _run_ping_pong_demo(cfg, em, workers):
    config = construct.build_configuration(cfg["R"], cfg["k"])
    approx, report = construct.fit_with_escalation(
        config, cfg["max_degree"], start_degree=cfg["start_degree"])
    em.say(f"fit degree: {approx.degree}")
    if not report.passed:
        em.say("warning: inequality verification did not pass; "
               "demo may break pattern")
    try:
        orbit, labels, verdict = construct.ping_pong_demo(
            config, approx, cfg["steps"], cfg["K_min"])
    except construct.PatternBreakError as e:
        em.say(f"pattern break at step {e.step}: {e}")
        raise AnalysisNegative(str(e))
    _orbit_csv(em, "orbit.csv", orbit)
    if em.want_figures:
        figures.save_orbit_figure(orbit, em.path("orbit.png"))
    em.say("annotation pattern: " + ", ".join(str(v) for v in labels))
    em.say(f"ping-pong detected: {verdict.detected}")
    if verdict.detected:
        em.say(f"pole visits at {verdict.m_indices}, "
               f"escapes at {verdict.n_indices}")
    else:
        raise AnalysisNegative("ping-pong pattern not detected")


_HANDLERS = {
    "classify": _run_classify,
    "ladder": _run_ladder,
    "fast-escape": _run_fast_escape,
    "render": _run_render,
    "backward": _run_backward,
    "commute": _run_commute,
    "julia-compare": _run_julia_compare,
    "construct": _run_construct,
    "thread": _run_thread,
    "itinerary": _run_itinerary,
    "ping-pong-demo": _run_ping_pong_demo,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="merodyn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SCHEMAS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--no-figures", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        cfg = _resolve_config(args.command, raw)
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
    except (OSError, json.JSONDecodeError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.out, exist_ok=True)
    em = Emitter(args.out, cfg, not args.no_figures)
    try:
        _HANDLERS[args.command](cfg, em, args.workers)
        em.say("status: pass")
        em.finish()
        return EXIT_PASS
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AnalysisNegative:
        em.say("status: negative")
        em.finish()
        return EXIT_NEGATIVE
    except ValueError as e:
        em.say(f"error: {e}")
        em.say("status: negative")
        em.finish()
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
