"""CSV point sets on the hyperboloid sheets and on known minimiser sets."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .moments import sheet_energy, to_uvw
from .symplectic import SqueezeParams, squeezed_moments

TAU = math.sqrt(4.0 / 3.0)


def hyperboloid_rows(nmax: int = 2, hbar: float = 1.0, b_range=(-1.5, 1.5), gamma_range=(-1.0, 1.0), shape=(13, 9)):
    """Rows ``(n, u, v, w)`` of squeezed number states over a (b, gamma) lattice."""
    rows = []
    for n in range(nmax + 1):
        for b in np.linspace(*b_range, shape[0]):
            for g in np.linspace(*gamma_range, shape[1]):
                p = to_uvw(squeezed_moments(n, SqueezeParams(float(b), float(g)), hbar))
                rows.append((n, p.u, p.v, p.w))
    return rows


def heisenberg_rows(nmax: int = 2, hbar: float = 1.0, gamma_max: float = 1.0, count: int = 41):
    """Rows ``(n, u, v)`` on the hyperbolas x y = e_n^2 at w = 0."""
    rows = []
    for n in range(nmax + 1):
        e = sheet_energy(n, hbar)
        for g in np.linspace(-gamma_max, gamma_max, count):
            rows.append((n, e * math.cosh(2 * g), e * math.sinh(2 * g)))
    return rows


def triple_line_rows(nmax: int = 2, hbar: float = 1.0):
    """Rows ``(n, u, v, w)`` of the triple-product minimisers, one per sheet."""
    return [(n, TAU * sheet_energy(n, hbar), 0.0, -0.5 * TAU * sheet_energy(n, hbar)) for n in range(nmax + 1)]


HEADERS = {
    "hyperboloid": ("n", "u", "v", "w"),
    "heisenberg": ("n", "u", "v"),
    "triple-line": ("n", "u", "v", "w"),
}


def surface_residual(kind: str, row, hbar: float = 1.0) -> float:
    """Residual of the defining equation of ``kind`` at ``row``."""
    n = int(row[0])
    e = sheet_energy(n, hbar)
    if kind == "heisenberg":
        _, u, v = row
        return u * u - v * v - e * e
    _, u, v, w = row
    res = u * u - v * v - w * w - e * e
    if kind == "triple-line":
        res = max(abs(res), abs(v), abs(w + u / 2))
    return res


def build(kind: str, nmax: int = 2, hbar: float = 1.0):
    if kind == "hyperboloid":
        return hyperboloid_rows(nmax, hbar)
    if kind == "heisenberg":
        return heisenberg_rows(nmax, hbar)
    if kind == "triple-line":
        return triple_line_rows(nmax, hbar)
    raise ValueError(f"unknown mesh kind {kind!r}")


def write_csv(path, kind: str, rows) -> None:
    """Write with a header row and LF endings; floats use round-trip repr."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADERS[kind])
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def read_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [(int(r[0]), *map(float, r[1:])) for r in reader]


def emit_mesh(kind: str, path, nmax: int = 2, hbar: float = 1.0):
    rows = build(kind, nmax, hbar)
    write_csv(path, kind, rows)
    return rows
