"""Spin-1/2 spinfoam vertex: intertwiners, the K5 contraction and amplitude functions.

Conventions
-----------
* Qubit states: ``(cos(theta/2), exp(i phi) sin(theta/2))``.
* Intertwiner qubit basis: recoupling channel (12)(34); ``|0>`` is the
  intermediate spin-0 state, ``|1>`` the intermediate spin-1 state.
* Tetrahedra are labelled 1..5. Tetrahedron ``a`` carries four legs, one per
  other tetrahedron, in the slot order of :data:`LEG_TABLE`.
* Each of the ten links ``(a, b)`` with ``a < b`` is contracted with the
  bilinear ``eps[m, n]`` where ``m`` sits on the leg of ``a`` and ``n`` on the
  leg of ``b``; ``eps = [[0, 1], [-1, 0]]``.
* Gate view: ``M[(i3 i4 i5), (i1 i2)] = A[i1, ..., i5]`` in big-endian order.
  Labels 1 and 2 are inputs (kets), 3, 4 and 5 outputs (bras).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, DomainError

TWO_PI = 2.0 * np.pi

EPSILON = np.array([[0.0, 1.0], [-1.0, 0.0]])

# Slot order of the legs of each tetrahedron, by the label of the neighbour
# each leg points to. Validated by the peak property (see tests).
LEG_TABLE: dict[int, tuple[int, int, int, int]] = {
    1: (2, 4, 3, 5),
    2: (1, 3, 4, 5),
    3: (1, 2, 4, 5),
    4: (1, 3, 2, 5),
    5: (1, 2, 3, 4),
}

CONVENTION = "recoupling=(12)(34);legs=2435,1345,1245,1325,1234;eps=low->high;bras=3,4,5"

INPUT_LABELS = (1, 2)
OUTPUT_LABELS = (3, 4, 5)


def _check_angles(theta, phi):
    if not (0.0 <= theta <= np.pi):
        raise DomainError(f"theta={theta!r} outside [0, pi]")
    if not (0.0 <= phi < TWO_PI):
        raise DomainError(f"phi={phi!r} outside [0, 2pi)")


@dataclass(frozen=True)
class QubitState:
    """Bloch-sphere angles of one quantum tetrahedron."""

    theta: float
    phi: float

    def __post_init__(self):
        _check_angles(self.theta, self.phi)

    @classmethod
    def wrapped(cls, theta: float, phi: float) -> "QubitState":
        """Build a state after folding ``phi`` into [0, 2pi)."""
        return cls(float(theta), float(np.mod(phi, TWO_PI)))

    def vector(self) -> np.ndarray:
        return bloch_to_vector(self)


REGULAR = QubitState(np.pi / 2, np.pi / 2)
REGULAR_BAR = QubitState(np.pi / 2, 3 * np.pi / 2)


@dataclass(frozen=True)
class BoundaryState:
    """Product boundary state of the five tetrahedra; ``tets[0]`` is label 1."""

    tets: tuple[QubitState, ...]

    def __post_init__(self):
        tets = tuple(self.tets)
        if len(tets) != 5:
            raise DimensionError(f"boundary state needs exactly 5 tetrahedra, got {len(tets)}")
        if not all(isinstance(q, QubitState) for q in tets):
            raise DomainError("boundary entries must be QubitState instances")
        object.__setattr__(self, "tets", tets)

    @classmethod
    def from_angles(cls, angles: Sequence[tuple[float, float]]) -> "BoundaryState":
        return cls(tuple(QubitState(float(t), float(p)) for t, p in angles))

    @classmethod
    def uniform(cls, q: QubitState) -> "BoundaryState":
        return cls((q,) * 5)

    def relabel(self, perm: Sequence[int]) -> "BoundaryState":
        """Return the state whose label ``a`` carries the old label ``perm[a-1]``."""
        return BoundaryState(tuple(self.tets[p - 1] for p in perm))

    def vectors(self) -> np.ndarray:
        return np.array([bloch_to_vector(q) for q in self.tets])


@dataclass(frozen=True)
class VertexTensor:
    """Normalized 2x2x2x2x2 vertex amplitude tensor.

    ``norm_scale`` is the largest singular value of the raw gate view; the raw
    contraction equals ``entries * norm_scale``.
    """

    entries: np.ndarray
    norm_scale: float
    convention: str = CONVENTION

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.shape != (2,) * 5:
            raise DimensionError(f"vertex tensor must have shape (2,)*5, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise DomainError("vertex tensor has non-finite entries")
        if not self.norm_scale > 0:
            raise DomainError("norm_scale must be positive")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True)
class ComplexityInput:
    n_vertices: int
    gate_complexity: float
    tet_bounds: tuple[float, ...] = ()
    face_spins: tuple[float, ...] = ()

    def __post_init__(self):
        if int(self.n_vertices) != self.n_vertices or self.n_vertices < 1:
            raise DomainError("n_vertices must be a positive integer")
        values = [self.gate_complexity, *self.tet_bounds, *self.face_spins]
        if any(not v > 0 for v in values):
            raise DomainError("complexity inputs must all be positive")
        object.__setattr__(self, "tet_bounds", tuple(self.tet_bounds))
        object.__setattr__(self, "face_spins", tuple(self.face_spins))


class ComplexityBound(NamedTuple):
    value: float
    overflow: bool


def bloch_to_vector(q) -> np.ndarray:
    """Map Bloch angles to ``(cos(theta/2), exp(i phi) sin(theta/2))``.

    Accepts a :class:`QubitState` or a ``(theta, phi)`` pair.
    """
    theta, phi = (q.theta, q.phi) if isinstance(q, QubitState) else q
    _check_angles(theta, phi)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def _bloch_vectors(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(theta / 2) + 0j, np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def build_intertwiner_basis() -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the SU(2)-invariant subspace of four spin-1/2 legs.

    ``iota0`` pairs legs (1,2) and (3,4) into singlets; ``iota1`` is the
    Gram-Schmidt remainder of the (13)(24) pairing, i.e. the state with
    intermediate spin 1 in the (12) channel.
    """
    singlet = EPSILON / np.sqrt(2)
    iota0 = np.einsum("ab,cd->abcd", singlet, singlet)
    cross = np.einsum("ac,bd->abcd", singlet, singlet)
    rest = cross - np.vdot(iota0, cross) * iota0
    iota1 = rest / np.linalg.norm(rest)
    return iota0.astype(np.complex128), iota1.astype(np.complex128)


def _leg_symbols(leg_table):
    letters = iter("abcdefghijklmnopqrst")
    return {(a, b): next(letters) for a in range(1, 6) for b in leg_table[a]}


def contract_vertex(bilinear=EPSILON, leg_table=LEG_TABLE, basis=None) -> np.ndarray:
    """Raw (unnormalized) K5 contraction of five intertwiners.

    Returns the complex tensor ``A[i1, ..., i5]``.
    """
    _check_leg_table(leg_table)
    iota = np.stack(basis if basis is not None else build_intertwiner_basis())
    legs = _leg_symbols(leg_table)
    out = "VWXYZ"
    subscripts, operands = [], []
    for a in range(1, 6):
        subscripts.append(out[a - 1] + "".join(legs[(a, b)] for b in leg_table[a]))
        operands.append(iota)
    bilinear = np.asarray(bilinear)
    for a, b in itertools.combinations(range(1, 6), 2):
        subscripts.append(legs[(a, b)] + legs[(b, a)])
        operands.append(bilinear)
    expr = ",".join(subscripts) + "->" + out
    return np.einsum(expr, *operands, optimize="greedy").astype(np.complex128)


def _check_leg_table(leg_table):
    for a in range(1, 6):
        expected = sorted(b for b in range(1, 6) if b != a)
        if sorted(leg_table.get(a, ())) != expected:
            raise ConfigError(f"leg table row {a} must be a permutation of {expected}")


def build_vertex_tensor(leg_table=LEG_TABLE) -> VertexTensor:
    raw = contract_vertex(leg_table=leg_table)
    scale = np.linalg.svd(_gate_view(raw), compute_uv=False)[0]
    convention = CONVENTION if leg_table is LEG_TABLE else f"custom legs {leg_table}"
    return VertexTensor(raw / scale, float(scale), convention)


def _gate_view(entries):
    return np.asarray(entries).reshape(4, 8).T


def gate_from_tensor(t: VertexTensor) -> np.ndarray:
    """8x4 gate: rows ``(i3 i4 i5)``, columns ``(i1 i2)``."""
    return _gate_view(t.entries).copy()


def tensor_from_gate(m, norm_scale: float = 1.0, convention: str = CONVENTION) -> VertexTensor:
    m = np.asarray(m)
    if m.shape != (8, 4):
        raise DimensionError(f"gate must be 8x4, got {m.shape}")
    return VertexTensor(m.T.reshape((2,) * 5), norm_scale, convention)


def _check_gate(m):
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (8, 4):
        raise DimensionError(f"gate must be 8x4, got {m.shape}")
    return m


def amplitudes_from_vectors(m, vectors) -> np.ndarray:
    """Batched amplitudes; ``vectors`` has shape (n, 5, 2) in label order."""
    m = _check_gate(m)
    vectors = np.asarray(vectors, dtype=np.complex128)
    if vectors.ndim != 3 or vectors.shape[1:] != (5, 2):
        raise DimensionError(f"expected (n, 5, 2) state vectors, got {vectors.shape}")
    return kernels.sandwich_amplitudes(m, vectors[:, :2], vectors[:, 2:])


def amplitude_from_matrix(m, b: BoundaryState) -> complex:
    """``<psi3 psi4 psi5| m |psi1 psi2>`` for any 8x4 matrix ``m``."""
    return complex(amplitudes_from_vectors(m, b.vectors()[None])[0])


def amplitude(t: VertexTensor, b: BoundaryState) -> complex:
    return amplitude_from_matrix(gate_from_tensor(t), b)


@dataclass(frozen=True)
class ScanSetup:
    """Boundary family for a 2D scan: ``ALL_EQUAL`` or ``VARY_ONE`` with a label."""

    kind: str
    label: int | None = None

    def __post_init__(self):
        if self.kind == "ALL_EQUAL":
            if self.label is not None:
                raise ConfigError("ALL_EQUAL takes no label")
        elif self.kind == "VARY_ONE":
            if self.label not in (1, 2, 3, 4, 5):
                raise ConfigError(f"VARY_ONE label must be in 1..5, got {self.label!r}")
        else:
            raise ConfigError(f"unknown scan setup {self.kind!r}")

    @property
    def name(self) -> str:
        return self.kind if self.kind == "ALL_EQUAL" else f"VARY_ONE({self.label})"

    @classmethod
    def parse(cls, text: str) -> "ScanSetup":
        """Parse ``ALL_EQUAL``, ``VARY_ONE(3)`` or ``VARY_ONE:3`` (case-insensitive)."""
        s = text.strip().upper().replace(" ", "")
        if s == "ALL_EQUAL":
            return cls("ALL_EQUAL")
        for prefix in ("VARY_ONE(", "VARY_ONE:", "VARY_ONE"):
            if s.startswith(prefix):
                tail = s[len(prefix):].rstrip(")")
                try:
                    return cls("VARY_ONE", int(tail))
                except ValueError:
                    break
        raise ConfigError(f"unknown scan setup {text!r}")


ALL_EQUAL = ScanSetup("ALL_EQUAL")


def VARY_ONE(label: int) -> ScanSetup:  # noqa: N802 - mirrors the setup name
    return ScanSetup("VARY_ONE", label)


ALL_SETUPS = (ALL_EQUAL, *(VARY_ONE(a) for a in range(1, 6)))

# Orientation of the fixed regular tetrahedra in VARY_ONE scans. The all-
# (pi/2, pi/2) assignment maximizes |A| at the all-regular point.
DEFAULT_REGULAR_TABLE: dict[int, QubitState] = {a: REGULAR for a in range(1, 6)}


@dataclass(frozen=True)
class ScanGrid:
    setup: ScanSetup
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray = field(repr=False)

    def argmax_abs(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(np.abs(self.values)), self.values.shape)
        return float(self.theta[i]), float(self.phi[j])

    def rows(self):
        """Yield ``(theta, phi, A)`` in row-major order (theta outer)."""
        for i, t in enumerate(self.theta):
            for j, p in enumerate(self.phi):
                yield float(t), float(p), complex(self.values[i, j])


def grid_axes(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Theta spans [0, pi] inclusive, phi spans [0, 2pi) exclusive."""
    if int(resolution) != resolution or resolution < 1:
        raise ConfigError(f"grid resolution must be a positive integer, got {resolution!r}")
    theta = np.linspace(0.0, np.pi, resolution)
    phi = np.linspace(0.0, TWO_PI, resolution, endpoint=False)
    return theta, phi


def scan_amplitudes(m, setup: ScanSetup | str, resolution: int = 101,
                    regular_table: dict[int, QubitState] | None = None,
                    workers: int = 1) -> ScanGrid:
    """Evaluate the amplitude over the (theta, phi) rectangle for one setup.

    With ``workers > 1`` the grid is split into contiguous chunks evaluated in
    a thread pool; each point is computed independently, so the result is
    bit-identical to the serial scan.
    """
    m = _check_gate(m)
    if isinstance(setup, str):
        setup = ScanSetup.parse(setup)
    elif not isinstance(setup, ScanSetup):
        raise ConfigError(f"unknown scan setup {setup!r}")
    table = DEFAULT_REGULAR_TABLE if regular_table is None else regular_table
    theta, phi = grid_axes(resolution)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    varied = _bloch_vectors(tt.ravel(), pp.ravel())
    n = varied.shape[0]
    vectors = np.empty((n, 5, 2), dtype=np.complex128)
    if setup.kind == "ALL_EQUAL":
        vectors[:] = varied[:, None, :]
    else:
        for a in range(1, 6):
            vectors[:, a - 1] = bloch_to_vector(table[a])
        vectors[:, setup.label - 1] = varied
    if workers > 1 and n > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(n), min(workers, n))
        values = np.empty(n, dtype=np.complex128)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda idx: amplitudes_from_vectors(m, vectors[idx]), chunks)
            for idx, part in zip(chunks, parts):
                values[idx] = part
    else:
        values = amplitudes_from_vectors(m, vectors)
    return ScanGrid(setup, theta, phi, values.reshape(tt.shape))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from QR of a Ginibre matrix with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_boundary_vectors(n_samples: int, seed: int, gauge: str = "bloch") -> np.ndarray:
    """(n, 5, 2) Haar-random qubit states from 2x2 Haar unitaries applied to (1, 0).

    ``gauge="bloch"`` (default) removes each state's global phase so the vector
    is the QubitState representative ``(cos(t/2), exp(i p) sin(t/2))``.
    ``gauge="raw"`` keeps the unitary's first column, whose random global
    phase makes every amplitude average to zero.
    """
    if gauge not in ("bloch", "raw"):
        raise ConfigError(f"unknown state gauge {gauge!r}")
    rng = np.random.default_rng(seed)
    shape = (n_samples, 5, 2, 2)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[..., None, :]
    v = q[..., :, 0]
    if gauge == "bloch":
        a = v[..., 0]
        mag = np.abs(a)
        phase = np.where(mag > 0, np.conj(a) / np.where(mag > 0, mag, 1), 1)
        v = np.stack([mag + 0j, v[..., 1] * phase], axis=-1)
    return np.ascontiguousarray(v)


def expectation_random(m, n_samples: int, seed: int, gauge: str = "bloch") -> tuple[complex, float]:
    """Monte Carlo mean of the amplitude over Haar-random product boundaries.

    Returns the sample mean and its standard error
    ``sqrt(sum |A - mean|^2 / (n (n - 1)))`` (zero for a single sample).
    In the Bloch gauge the exact mean is ``A_00000 * (2/3)**5``.
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise DomainError("n_samples must be a positive integer")
    amps = amplitudes_from_vectors(m, random_boundary_vectors(n_samples, seed, gauge))
    mean = complex(amps.mean())
    if n_samples == 1:
        return mean, 0.0
    dev = np.abs(amps - mean) ** 2
    return mean, float(np.sqrt(dev.sum() / (n_samples * (n_samples - 1))))


def symmetry_group() -> list[tuple[int, ...]]:
    """Relabelings generated by swap(1, 2) and permutations of {3, 4, 5}."""
    group = []
    for head in itertools.permutations((1, 2)):
        for tail in itertools.permutations((3, 4, 5)):
            group.append(head + tail)
    return group


def symmetry_residual(m, n_samples: int, seed: int) -> float:
    """Largest ``|A(sigma b) - A(b)|`` over sampled boundaries and the symmetry group."""
    if int(n_samples) != n_samples or n_samples < 1:
        raise DomainError("n_samples must be a positive integer")
    vectors = random_boundary_vectors(n_samples, seed)
    base = amplitudes_from_vectors(m, vectors)
    worst = 0.0
    for perm in symmetry_group():
        moved = amplitudes_from_vectors(m, vectors[:, [p - 1 for p in perm]])
        worst = max(worst, float(np.max(np.abs(moved - base))))
    return worst


def complexity_bound(c: ComplexityInput) -> ComplexityBound:
    """``C**N * prod(M_tet) * prod(J_face)``; overflow gives ``(inf, True)``."""
    try:
        value = float(c.gate_complexity) ** c.n_vertices
        value *= math.prod(float(x) for x in c.tet_bounds)
        value *= math.prod(float(x) for x in c.face_spins)
    except OverflowError:
        return ComplexityBound(math.inf, True)
    if math.isinf(value):
        return ComplexityBound(math.inf, True)
    return ComplexityBound(value, False)
