"""Plain-text interchange formats.

All floats are written with 17 significant digits so a read-back reproduces
the in-memory values exactly.

Matrix file::

    # lqgchip-matrix v1
    # rows: 8
    # cols: 4
    # <key>: <value>          (free metadata, e.g. norm_scale, convention)
    re,im re,im re,im re,im   (one matrix row per line)

Mesh file::

    # lqgchip-mesh v1
    dim 12
    cells 66
    m,theta,phi               (one line per cell, in traversal order)
    output_phases
    phase                     (one line per mode)
    [splitter_errors          (optional: r1,r2 per cell)]

Count dataset::

    # lqgchip-counts v1
    # seed: 7
    # noise: phase_sigma=...,splitter_sigma=...,photon_overlap=...,mode_transmissions=a|b|...
    # section: singles | hom_dip | hom_reference
    input_modes;output_pattern;counts;seconds
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .interferometer import MZIMesh
from .photonics import CountRecord
from .tomography import CountDataset

FLOAT = "{:.17g}"


def fmt(x: float) -> str:
    return FLOAT.format(float(x))


def _write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _parse_header(lines):
    meta = {}
    body = []
    for line in lines:
        line = line.rstrip("\n")
        if line.startswith("#"):
            content = line[1:].strip()
            if ":" in content:
                key, value = content.split(":", 1)
                meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line.strip())
    return meta, body


def write_matrix(path, m, meta: dict | None = None) -> Path:
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    lines = ["# lqgchip-matrix v1", f"# rows: {m.shape[0]}", f"# cols: {m.shape[1]}"]
    for key, value in (meta or {}).items():
        value = fmt(value) if isinstance(value, (float, np.floating)) else str(value)
        lines.append(f"# {key}: {value}")
    for row in m:
        lines.append(" ".join(f"{fmt(z.real)},{fmt(z.imag)}" for z in row))
    return _write_text(path, "\n".join(lines) + "\n")


def read_matrix(path) -> tuple[np.ndarray, dict]:
    with open(path, encoding="utf-8") as fh:
        meta, body = _parse_header(fh)
    rows = []
    for line in body:
        entries = []
        for pair in line.split():
            re, im = pair.split(",")
            entries.append(complex(float(re), float(im)))
        rows.append(entries)
    m = np.array(rows, dtype=np.complex128)
    if "rows" in meta and m.shape != (int(meta["rows"]), int(meta["cols"])):
        raise ValueError(f"{path}: matrix body {m.shape} disagrees with header")
    return m, meta


def write_mesh(path, mesh: MZIMesh) -> Path:
    lines = ["# lqgchip-mesh v1", f"dim {mesh.dim}", f"cells {mesh.n_cells}"]
    for mode, theta, phi in mesh.cells:
        lines.append(f"{int(mode)},{fmt(theta)},{fmt(phi)}")
    lines.append("output_phases")
    lines.extend(fmt(p) for p in mesh.output_phases)
    if np.any(mesh.splitter_errors):
        lines.append("splitter_errors")
        lines.extend(f"{fmt(a)},{fmt(b)}" for a, b in mesh.splitter_errors)
    return _write_text(path, "\n".join(lines) + "\n")


def read_mesh(path) -> MZIMesh:
    with open(path, encoding="utf-8") as fh:
        _, body = _parse_header(fh)
    it = iter(body)
    dim = int(next(it).split()[1])
    n_cells = int(next(it).split()[1])
    cells = []
    for _ in range(n_cells):
        m, theta, phi = next(it).split(",")
        cells.append((int(m), float(theta), float(phi)))
    if next(it) != "output_phases":
        raise ValueError(f"{path}: expected output_phases section")
    phases = [float(next(it)) for _ in range(dim)]
    errors = None
    tail = list(it)
    if tail and tail[0] == "splitter_errors":
        errors = [tuple(float(v) for v in line.split(",")) for line in tail[1:1 + n_cells]]
    return MZIMesh(dim, np.array(cells, dtype=float).reshape(-1, 3), np.array(phases), errors)


def _modes(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v != "")


def write_counts(path, data: CountDataset) -> Path:
    lines = ["# lqgchip-counts v1"]
    for key, value in data.header.items():
        lines.append(f"# {key}: {value}")
    for section in ("singles", "hom_dip", "hom_reference"):
        lines.append(f"# section: {section}")
        for r in getattr(data, section):
            lines.append(";".join([
                ",".join(map(str, r.input_modes)),
                ",".join(map(str, r.output_pattern)),
                str(r.counts),
                fmt(r.integration_time),
            ]))
    return _write_text(path, "\n".join(lines) + "\n")


def read_counts(path) -> CountDataset:
    data = CountDataset()
    section = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                content = line[1:].strip()
                if content.startswith("section:"):
                    section = content.split(":", 1)[1].strip()
                    if section not in ("singles", "hom_dip", "hom_reference"):
                        raise ValueError(f"{path}: unknown section {section!r}")
                elif ":" in content:
                    key, value = content.split(":", 1)
                    data.header[key.strip()] = value.strip()
                continue
            if section is None:
                raise ValueError(f"{path}: record before any section header")
            inputs, outputs, counts, seconds = line.split(";")
            getattr(data, section).append(
                CountRecord(_modes(inputs), _modes(outputs), int(counts), float(seconds)))
    return data


def write_grid(path, grid) -> Path:
    lines = ["theta,phi,re_A,im_A,abs_A"]
    for theta, phi, a in grid.rows():
        lines.append(",".join(fmt(v) for v in (theta, phi, a.real, a.imag, abs(a))))
    return _write_text(path, "\n".join(lines) + "\n")


def read_grid(path) -> np.ndarray:
    """Grid rows as a float array with columns theta, phi, re_A, im_A, abs_A."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_report(path, sections: dict[str, dict], title: str = "lqgchip report") -> Path:
    """Sectioned ``key = value`` text with floats at 17 significant digits."""
    lines = [f"# {title}"]
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        for key, value in entries.items():
            lines.append(f"{key} = {_report_value(value)}")
        lines.append("")
    return _write_text(path, "\n".join(lines))


def _report_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (complex, np.complexfloating)):
        return f"{fmt(value.real)},{fmt(value.imag)}"
    if isinstance(value, (float, np.floating)):
        return fmt(value)
    if isinstance(value, (tuple, list)):
        return " ".join(_report_value(v) for v in value)
    return str(value)


def read_report(path) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = sections.setdefault(line[1:-1], {})
            elif "=" in line and current is not None:
                key, value = line.split("=", 1)
                current[key.strip()] = value.strip()
    return sections


def ensure_writable_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path
