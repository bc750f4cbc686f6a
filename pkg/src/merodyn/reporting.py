"""Report headers, config hashing, and CSV serialization helpers.

Every output file starts with the tool version, a hash of the resolved
configuration, and the fixed sampling offsets; there is no randomness
anywhere, so identical configs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from typing import Iterable, Sequence

VERSION = "0.1.0"
LATTICE_OFFSET = 0.5  # cell-center offset used by every deterministic grid


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON encoding of the resolved config."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"),
                      default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def header_lines(config: dict) -> list[str]:
    return [
        f"merodyn {VERSION}",
        f"config sha256 {config_hash(config)}",
        f"sampling deterministic lattice offset {LATTICE_OFFSET}",
    ]


def write_report(path, config: dict, body_lines: Sequence[str]) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header_lines(config):
            fh.write(f"# {line}\n")
        for line in body_lines:
            fh.write(line + "\n")


def write_csv(path, config: dict, field_names: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines(config):
            fh.write(f"# {line}\r\n")
        writer = csv.writer(fh)
        writer.writerow(field_names)
        for row in rows:
            writer.writerow(row)


def write_pgm(path, config: dict, raster) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(raster.to_pgm(header_lines(config)))


def format_complex(z: complex) -> str:
    return f"{z.real!r}{z.imag:+}j" if z.imag else repr(z.real)


def coefficients_rows(coefficients) -> list[tuple[int, str, str]]:
    return [(i, repr(complex(c).real), repr(complex(c).imag))
            for i, c in enumerate(coefficients)]


def format_sphere_point(p) -> str:
    return "inf" if p.is_infinity else format_complex(p.finite)


def violations_rows(violations) -> list[tuple]:
    rows = []
    for v in violations:
        rows.append((v.index, repr(v.z.real), repr(v.z.imag),
                     format_sphere_point(v.fg), format_sphere_point(v.gf),
                     repr(v.discrepancy)))
    return rows


def render_to_string(config: dict, body_lines: Sequence[str]) -> str:
    buf = io.StringIO()
    for line in header_lines(config):
        buf.write(f"# {line}\n")
    for line in body_lines:
        buf.write(line + "\n")
    return buf.getvalue()
