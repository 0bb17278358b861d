"""Unitary dilation, Clements square-mesh compilation and mesh noise.

Cell convention
---------------
A cell on adjacent modes ``(m, m+1)`` applies the external phase ``phi`` to the
upper input arm and then a Mach-Zehnder interferometer whose two balanced
couplers enclose a differential internal phase ``2 theta``::

    T(theta, phi) = [[exp(i phi) cos(theta), -sin(theta)],
                     [exp(i phi) sin(theta),  cos(theta)]]

with couplers ``K = [[1, i], [i, 1]] / sqrt(2)`` realizing
``T = K diag(exp(-i theta), exp(i theta)) K^dagger diag(exp(i phi), 1)``.
``theta = 0`` is the transparent (bar) point, ``theta = pi/4`` the balanced
50:50 point. Cells are stored in the order light traverses them;
``compose`` returns ``diag(exp(i output_phases)) @ T_last @ ... @ T_first``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, InvariantError, NormalizationError

TWO_PI = 2.0 * np.pi
UNITARY_ATOL = 1e-10

DEFAULT_GATE_ROWS = tuple(range(8))
DEFAULT_GATE_COLS = tuple(range(4))


@dataclass(frozen=True)
class MZIMesh:
    """Compiled square mesh.

    ``cells`` is an (n_cells, 3) array of ``(mode, theta, phi)`` rows.
    ``splitter_errors`` holds the reflectivity offsets of the two couplers of
    each cell (zero for an ideal chip).
    """

    dim: int
    cells: np.ndarray
    output_phases: np.ndarray
    splitter_errors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float).reshape(-1, 3)
        phases = np.array(self.output_phases, dtype=float)
        if phases.shape != (self.dim,):
            raise DimensionError(f"need {self.dim} output phases, got {phases.shape}")
        if np.any(cells[:, 0] < 0) or np.any(cells[:, 0] > self.dim - 2):
            raise DimensionError("cell mode index out of range")
        errors = self.splitter_errors
        errors = np.zeros((len(cells), 2)) if errors is None else np.array(errors, dtype=float)
        if errors.shape != (len(cells), 2):
            raise DimensionError("splitter_errors must have shape (n_cells, 2)")
        for arr in (cells, phases, errors):
            arr.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "output_phases", phases)
        object.__setattr__(self, "splitter_errors", errors)

    @property
    def n_cells(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class NoiseModel:
    """Fabrication and operation imperfections of the chip.

    phase_sigma
        Gaussian jitter (rad) added to every cell's ``theta`` and ``phi``.
    splitter_sigma
        Gaussian offset of every coupler's reflectivity away from 1/2.
    mode_transmissions
        Per-output-mode intensity transmission in (0, 1].
    photon_overlap
        Two-photon wavefunction overlap ``x`` (used by the photonics layer).
    """

    phase_sigma: float = 0.0
    splitter_sigma: float = 0.0
    mode_transmissions: tuple[float, ...] = ()
    photon_overlap: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.phase_sigma < 0 or self.splitter_sigma < 0:
            raise DomainError("noise sigmas must be non-negative")
        t = tuple(float(v) for v in self.mode_transmissions)
        if any(not (0.0 < v <= 1.0) for v in t):
            raise DomainError("mode transmissions must lie in (0, 1]")
        if not 0.0 <= self.photon_overlap <= 1.0:
            raise DomainError("photon overlap must lie in [0, 1]")
        object.__setattr__(self, "mode_transmissions", t)

    def transmissions(self, dim: int) -> np.ndarray:
        if not self.mode_transmissions:
            return np.ones(dim)
        if len(self.mode_transmissions) != dim:
            raise DimensionError(f"need {dim} mode transmissions, got {len(self.mode_transmissions)}")
        return np.array(self.mode_transmissions)


def check_unitary(u, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {u.shape}")
    err = unitarity_error(u)
    if err > atol:
        raise InvariantError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
    return u


def unitarity_error(u) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))


def _psd_sqrt(h):
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def dilate(m, rows=DEFAULT_GATE_ROWS, cols=DEFAULT_GATE_COLS, dim: int = 12) -> np.ndarray:
    """Embed a contraction ``m`` as the ``rows x cols`` block of a unitary.

    The first ``len(cols)`` columns are ``[m; sqrt(I - m^dag m)]`` (principal
    square root); the remaining columns are the Householder QR completion, each
    column rescaled so its first non-negligible entry is real-positive. The
    block is then moved to
    ``rows`` x ``cols`` by a permutation of modes.
    """
    m = np.asarray(m, dtype=np.complex128)
    p, q = m.shape
    rows, cols = tuple(rows), tuple(cols)
    if (len(rows), len(cols)) != (p, q):
        raise DimensionError(f"placement {len(rows)}x{len(cols)} does not match block {m.shape}")
    if p + q > dim:
        raise DimensionError(f"a {p}x{q} block needs at least {p + q} modes, got {dim}")
    if len(set(rows)) != p or len(set(cols)) != q or max(rows + cols) >= dim or min(rows + cols) < 0:
        raise DimensionError("placement indices must be distinct and inside the mode range")
    smax = np.linalg.svd(m, compute_uv=False)[0] if m.size else 0.0
    if smax > 1 + 1e-12:
        raise NormalizationError(
            f"largest singular value {smax:.15g} exceeds 1; rescale the matrix before dilating")

    head = np.zeros((dim, q), dtype=np.complex128)
    head[:p] = m
    head[p:p + q] = _psd_sqrt(np.eye(q) - m.conj().T @ m)

    qmat, _ = np.linalg.qr(head, mode="complete")
    rest = qmat[:, q:]
    for k in range(rest.shape[1]):
        col = rest[:, k]
        lead = col[np.argmax(np.abs(col) > 1e-12)]
        rest[:, k] = col * (abs(lead) / lead)
    u = np.concatenate([head, rest], axis=1)

    row_order = list(rows) + [i for i in range(dim) if i not in rows]
    col_order = list(cols) + [j for j in range(dim) if j not in cols]
    out = np.empty_like(u)
    out[np.ix_(row_order, col_order)] = u
    return out


def cell_matrix(theta: float, phi: float, errors=(0.0, 0.0)) -> np.ndarray:
    """2x2 transfer matrix of one cell; ``errors`` offset the couplers' reflectivities."""
    k1 = _coupler(errors[0])
    k2 = _coupler(errors[1])
    inner = np.diag([np.exp(-1j * theta), np.exp(1j * theta)])
    return k2 @ inner @ k1.conj().T @ np.diag([np.exp(1j * phi), 1.0])


def _coupler(dr):
    r = np.clip(0.5 + dr, 0.0, 1.0)
    return np.array([[np.sqrt(1 - r), 1j * np.sqrt(r)], [1j * np.sqrt(r), np.sqrt(1 - r)]])


def _ideal_cell(theta, phi):
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    return np.array([[e * c, -s], [e * s, c]])


def clements_compose(mesh: MZIMesh) -> np.ndarray:
    u = np.eye(mesh.dim, dtype=np.complex128)
    ideal = not np.any(mesh.splitter_errors)
    for (mode, theta, phi), errs in zip(mesh.cells, mesh.splitter_errors):
        m = int(mode)
        t = _ideal_cell(theta, phi) if ideal else cell_matrix(theta, phi, errs)
        u[m:m + 2, :] = t @ u[m:m + 2, :]
    return np.exp(1j * mesh.output_phases)[:, None] * u


def _wrap(phase):
    return float(np.mod(phase, TWO_PI)) % TWO_PI


def clements_decompose(u) -> MZIMesh:
    """Decompose a unitary into ``n(n-1)/2`` cells on a square mesh.

    Nulling order: for each anti-diagonal ``i = 0 .. n-2`` of the lower
    triangle, even ``i`` null from the right (column operations), odd ``i``
    null from the left (row operations); the left cells are then moved through
    the residual diagonal.
    """
    u = check_unitary(u).copy()
    n = u.shape[0]
    right = []
    left = []
    for i in range(n - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                x, m = n - 1 - j, i - j
                a, b = u[x, m], u[x, m + 1]
                if a == 0:
                    theta, phi = 0.0, 0.0
                else:
                    theta = float(np.arctan2(abs(a), abs(b)))
                    phi = _wrap(np.angle(a) - np.angle(b))
                tinv = _ideal_cell(theta, phi).conj().T
                u[:, m:m + 2] = u[:, m:m + 2] @ tinv
                right.append((m, theta, phi))
        else:
            for j in range(1, i + 2):
                m = n + j - i - 3
                col = j - 1
                a, b = u[m, col], u[m + 1, col]
                if b == 0:
                    theta, phi = 0.0, 0.0
                else:
                    theta = float(np.arctan2(abs(b), abs(a)))
                    phi = _wrap(np.pi + np.angle(b) - np.angle(a))
                t = _ideal_cell(theta, phi)
                u[m:m + 2, :] = t @ u[m:m + 2, :]
                left.append((m, theta, phi))

    d = np.diag(u).copy()
    moved = []
    for m, theta, phi in reversed(left):
        d1, d2 = d[m], d[m + 1]
        if theta == 0.0:
            # pure phase cell: fold it into the diagonal
            d[m] = np.exp(-1j * phi) * d1
            moved.append((m, 0.0, 0.0))
            continue
        d[m] = -np.exp(-1j * phi) * d2
        moved.append((m, theta, _wrap(np.angle(-d1 / d2))))
    # U = D * moved[::-1] in product order ... see module docstring
    cells = right + moved
    output_phases = np.array([_wrap(np.angle(z)) for z in d])
    return MZIMesh(n, np.array(cells, dtype=float).reshape(-1, 3), output_phases)


def apply_noise(mesh: MZIMesh, noise: NoiseModel) -> tuple[MZIMesh, np.ndarray]:
    """Perturb a mesh and return it with the lossy transfer matrix.

    Draw order from ``default_rng(noise.seed)``: theta jitter, phi jitter,
    coupler offsets. The returned matrix is ``diag(sqrt(t)) @ U_noisy``.
    """
    rng = np.random.default_rng(noise.seed)
    n = mesh.n_cells
    dtheta = rng.normal(0.0, 1.0, n) * noise.phase_sigma
    dphi = rng.normal(0.0, 1.0, n) * noise.phase_sigma
    dsplit = rng.normal(0.0, 1.0, (n, 2)) * noise.splitter_sigma
    cells = mesh.cells.copy()
    cells[:, 1] += dtheta
    cells[:, 2] += dphi
    noisy = MZIMesh(mesh.dim, cells, mesh.output_phases, mesh.splitter_errors + dsplit)
    u = clements_compose(noisy)
    e = np.sqrt(noise.transmissions(mesh.dim))[:, None] * u
    return noisy, e


def mean_noisy_fidelity(phase_sigma: float, meshes, unitaries, splitter_sigma: float = 0.0,
                        seed: int = 0) -> float:
    """Mean amplitude fidelity of the noisy unitaries against their targets."""
    from .tomography import amplitude_fidelity

    total = 0.0
    for s, (mesh, u) in enumerate(zip(meshes, unitaries)):
        noise = NoiseModel(phase_sigma=phase_sigma, splitter_sigma=splitter_sigma, seed=seed + s)
        _, unoisy = apply_noise(mesh, noise)
        total += amplitude_fidelity(u, unoisy)
    return total / len(meshes)


def calibrate_phase_sigma(target: float = 0.98, dim: int = 12, n_seeds: int = 200,
                          splitter_sigma: float = 0.0, seed: int = 0,
                          tol: float = 1e-4, max_sigma: float = 1.0) -> float:
    """Phase jitter giving mean amplitude fidelity ``target`` on Haar-random meshes.

    Bisection with common random numbers (the same unitaries and noise seeds
    at every step), so the mean fidelity is a deterministic, decreasing
    function of the jitter.
    """
    from .lqg_core import haar_unitary

    if not 0 < target < 1:
        raise DomainError("target fidelity must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    unitaries = [haar_unitary(dim, rng) for _ in range(n_seeds)]
    meshes = [clements_decompose(u) for u in unitaries]
    lo, hi = 0.0, max_sigma
    if mean_noisy_fidelity(hi, meshes, unitaries, splitter_sigma, seed) > target:
        raise DomainError(f"fidelity {target} is not reachable with phase_sigma <= {max_sigma}")
    while hi - lo > 1e-7:
        mid = 0.5 * (lo + hi)
        f = mean_noisy_fidelity(mid, meshes, unitaries, splitter_sigma, seed)
        if abs(f - target) < tol:
            return mid
        if f > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
