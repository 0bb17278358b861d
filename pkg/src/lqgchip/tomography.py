"""Transfer-matrix reconstruction from single-photon and HOM data.

Amplitudes come from single-photon transmission counts; phases of a
``rows x cols`` block come from HOM visibilities under the gauge in which the
block's first row and first column are real and positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DimensionError, InsufficientDataError, PlanningError
from .photonics import (
    CountRecord,
    VisibilityRecord,
    hom_visibility,
    two_photon_coincidence,
)

TWO_PI = 2.0 * np.pi
COS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MeasurementPlan:
    """Which settings to measure.

    ``hom`` holds chip-mode tuples ``(i, j, k, l)``: inputs ``i, j`` and
    outputs ``k, l``. The first ``(rows-1)*(cols-1)`` entries are the primary
    settings, any further ones are auxiliary sign-resolving settings.
    """

    rows: int
    cols: int
    transmissions: tuple[int, ...]
    hom: tuple[tuple[int, int, int, int], ...]
    row_modes: tuple[int, ...]
    col_modes: tuple[int, ...]

    @property
    def n_primary(self) -> int:
        return (self.rows - 1) * (self.cols - 1)


def plan_measurements(rows: int, cols: int, n_inputs: int | None = None,
                      row_modes: Sequence[int] | None = None,
                      col_modes: Sequence[int] | None = None,
                      auxiliary: bool = False) -> MeasurementPlan:
    """Plan transmissions and HOM settings for a ``rows x cols`` block.

    With ``n_inputs`` set, one transmission measurement is planned for every
    chip input ``0 .. n_inputs-1``; otherwise one per block column.
    """
    if rows < 2 or cols < 2:
        raise PlanningError(f"need at least a 2x2 block, got {rows}x{cols}")
    row_modes = tuple(range(rows)) if row_modes is None else tuple(row_modes)
    col_modes = tuple(range(cols)) if col_modes is None else tuple(col_modes)
    if len(row_modes) != rows or len(col_modes) != cols:
        raise PlanningError("row/column mode lists do not match the block shape")
    transmissions = tuple(range(n_inputs)) if n_inputs is not None else col_modes
    r0, c0 = row_modes[0], col_modes[0]
    hom = [(c0, col_modes[c], r0, row_modes[r]) for r in range(1, rows) for c in range(1, cols)]
    if auxiliary:
        for r in range(1, rows):
            for c in range(2, cols):
                hom.append((col_modes[c - 1], col_modes[c], r0, row_modes[r]))
        for r in range(2, rows):
            hom.append((c0, col_modes[1], row_modes[r - 1], row_modes[r]))
    return MeasurementPlan(rows, cols, transmissions, tuple(hom), row_modes, col_modes)


@dataclass
class CountDataset:
    """Raw counts of one simulated characterization run."""

    singles: list[CountRecord] = field(default_factory=list)
    hom_dip: list[CountRecord] = field(default_factory=list)
    hom_reference: list[CountRecord] = field(default_factory=list)
    header: dict[str, str] = field(default_factory=dict)


def simulate_dataset(e, plan: MeasurementPlan, x: float, singles_rate: float,
                     singles_time: float, pair_rate: float, hom_time: float,
                     seed: int) -> CountDataset:
    """Poisson counts for every setting of ``plan`` through transfer matrix ``e``.

    Each HOM measurement spends half its time at zero delay (the dip) and half
    at large delay (distinguishable reference). Draws use one generator seeded
    with ``seed`` in plan order: singles first, then (dip, reference) pairs.
    """
    e = np.asarray(e)
    rng = np.random.default_rng(seed)
    data = CountDataset()
    for i in plan.transmissions:
        for k in range(e.shape[0]):
            lam = abs(e[k, i]) ** 2 * singles_rate * singles_time
            data.singles.append(CountRecord((i,), (k,), int(rng.poisson(lam)), singles_time))
    half = hom_time / 2
    for i, j, k, l in plan.hom:
        p_x = two_photon_coincidence(e, i, j, k, l, x)
        p_0 = two_photon_coincidence(e, i, j, k, l, 0.0)
        dip = int(rng.poisson(p_x * pair_rate * half))
        ref = int(rng.poisson(p_0 * pair_rate * half))
        data.hom_dip.append(CountRecord((i, j), (k, l), dip, half))
        data.hom_reference.append(CountRecord((i, j), (k, l), ref, half))
    return data


def visibilities_from_counts(dip: Sequence[CountRecord],
                             reference: Sequence[CountRecord]) -> list[VisibilityRecord]:
    """``V = 1 - N_dip/N_ref`` (time-normalized) with Poisson error propagation."""
    ref_by_key = {(r.input_modes, r.output_pattern): r for r in reference}
    out = []
    for d in dip:
        key = (d.input_modes, d.output_pattern)
        if key not in ref_by_key:
            raise InsufficientDataError(f"no reference measurement for HOM setting {key}")
        r = ref_by_key[key]
        if r.counts == 0:
            out.append(VisibilityRecord(d.input_modes, d.output_pattern, 0.0, 1.0))
            continue
        ratio = (d.counts / d.integration_time) / (r.counts / r.integration_time)
        rel = np.sqrt(1.0 / max(d.counts, 1) + 1.0 / r.counts)
        out.append(VisibilityRecord(d.input_modes, d.output_pattern,
                                    min(1.0, 1.0 - ratio), float(ratio * rel)))
    return out


def exact_visibilities(e, plan: MeasurementPlan, x: float) -> list[VisibilityRecord]:
    """Noise-free visibilities for every HOM setting in ``plan``."""
    return [VisibilityRecord((i, j), (k, l), hom_visibility(e, i, j, k, l, x), 0.0)
            for i, j, k, l in plan.hom]


def _normalize_columns(p):
    norms = np.linalg.norm(p, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return p / safe


def amplitudes_from_probabilities(prob) -> np.ndarray:
    """Column-normalized ``sqrt(prob)``; the infinite-statistics estimator."""
    prob = np.asarray(prob, dtype=float)
    if np.any(prob.sum(axis=0) <= 0):
        raise InsufficientDataError("an input column has zero total probability")
    return _normalize_columns(np.sqrt(np.clip(prob, 0.0, None)))


def estimate_amplitudes(singles: Sequence[CountRecord], n_outputs: int | None = None,
                        n_inputs: int | None = None) -> np.ndarray:
    """``|E_ki|`` from singles counts, each measured column normalized to one.

    Columns of inputs that were never measured are left at zero.
    """
    if not singles:
        raise InsufficientDataError("no single-photon records")
    n_out = n_outputs or 1 + max(r.output_pattern[0] for r in singles)
    n_in = n_inputs or 1 + max(r.input_modes[0] for r in singles)
    rates = np.zeros((n_out, n_in))
    seen = np.zeros((n_out, n_in), dtype=bool)
    for r in singles:
        k, i = r.output_pattern[0], r.input_modes[0]
        rates[k, i] += r.counts / r.integration_time
        seen[k, i] = True
    measured = seen.any(axis=0)
    for i in np.flatnonzero(measured):
        if not seen[:, i].all():
            raise InsufficientDataError(f"input {i} lacks records for some outputs")
        if rates[:, i].sum() <= 0:
            raise InsufficientDataError(f"input {i} registered zero counts")
    return _normalize_columns(np.sqrt(rates))


class PhaseEstimate(NamedTuple):
    phases: np.ndarray
    clamped: tuple[tuple[int, int, int, int], ...]
    residual: float
    sign_ambiguous: bool


def _predicted_visibility(mat, key_block, x):
    (ci, cj), (rk, rl) = key_block
    direct = mat[rk, ci] * mat[rl, cj]
    swapped = mat[rk, cj] * mat[rl, ci]
    denom = abs(direct) ** 2 + abs(swapped) ** 2
    if denom == 0:
        return 0.0
    return float(-2 * x ** 2 * (direct * np.conj(swapped)).real / denom)


def _gauge_reference_phases(prior):
    prior = np.asarray(prior)
    ang = np.angle(prior)
    return ang - ang[:, :1] - ang[:1, :] + ang[0, 0]


def _wrap_diff(a, b):
    return abs((a - b + np.pi) % TWO_PI - np.pi)


def estimate_phases(amps, vis: Sequence[VisibilityRecord], x: float,
                    row_modes: Sequence[int] | None = None,
                    col_modes: Sequence[int] | None = None,
                    prior=None) -> PhaseEstimate:
    """Solve the block phases from HOM visibilities.

    Sequential pass: each primary visibility (inputs: first column and
    column ``c``; outputs: first row and row ``r``) fixes ``cos(phase[r, c])``.
    The sign of each phase comes from ``prior`` (the programmed target, if
    given) or from auxiliary visibilities; a global least-squares refinement
    over all visibilities follows.
    """
    amps = np.asarray(amps, dtype=float)
    rows, cols = amps.shape
    if not x > 0:
        raise PlanningError("photon overlap must be positive to infer phases")
    row_modes = tuple(range(rows)) if row_modes is None else tuple(row_modes)
    col_modes = tuple(range(cols)) if col_modes is None else tuple(col_modes)
    row_idx = {m: r for r, m in enumerate(row_modes)}
    col_idx = {m: c for c, m in enumerate(col_modes)}

    records = {}
    for v in vis:
        try:
            key = ((col_idx[v.inputs[0]], col_idx[v.inputs[1]]),
                   (row_idx[v.outputs[0]], row_idx[v.outputs[1]]))
        except KeyError:
            continue
        records[key] = v

    phases = np.zeros((rows, cols))
    clamped = []
    magnitude = np.zeros((rows, cols))
    for r in range(1, rows):
        for c in range(1, cols):
            key = ((0, c), (0, r))
            if key not in records:
                raise PlanningError(f"missing HOM setting for block entry ({r}, {c})")
            a = amps[0, 0] * amps[r, c]
            b = amps[0, c] * amps[r, 0]
            if a * b == 0:
                continue
            cosv = -records[key].visibility * (a * a + b * b) / (2 * x * x * a * b)
            if abs(cosv) > 1 + COS_TOLERANCE:
                clamped.append((col_modes[0], col_modes[c], row_modes[0], row_modes[r]))
            magnitude[r, c] = np.arccos(np.clip(cosv, -1.0, 1.0))
    phases[:] = magnitude

    aux_keys = [k for k in records if not (k[0][0] == 0 and k[1][0] == 0)]
    sign_ambiguous = False
    if prior is not None:
        ref = _gauge_reference_phases(prior)
        flip = _wrap_diff(-magnitude, ref) < _wrap_diff(magnitude, ref)
        phases[flip] = -magnitude[flip]
    elif aux_keys:
        phases = _resolve_signs(magnitude, amps, records, aux_keys, x)
    else:
        sign_ambiguous = bool(np.any((magnitude > 1e-9) & (magnitude < np.pi - 1e-9)))

    phases, residual = _refine(phases, amps, records, x)
    return PhaseEstimate(np.mod(phases, TWO_PI), tuple(clamped), residual, sign_ambiguous)


def _block_matrix(amps, phases):
    return amps * np.exp(1j * phases)


def _resolve_signs(magnitude, amps, records, aux_keys, x):
    """Greedy sign choice: the first non-trivial phase is taken positive."""
    rows, cols = magnitude.shape
    phases = magnitude.copy()
    resolved = np.zeros_like(magnitude, dtype=bool)
    resolved[0, :] = True
    resolved[:, 0] = True
    trivial = (magnitude < 1e-9) | (magnitude > np.pi - 1e-9)
    resolved |= trivial
    first = True
    progress = True
    while progress and not resolved.all():
        progress = False
        for key in aux_keys:
            entries = {(key[1][0], key[0][0]), (key[1][0], key[0][1]),
                       (key[1][1], key[0][0]), (key[1][1], key[0][1])}
            open_ = [e for e in entries if not resolved[e]]
            if len(open_) != 1:
                continue
            r, c = open_[0]
            best = None
            for sign in (1.0, -1.0):
                trial = phases.copy()
                trial[r, c] = sign * magnitude[r, c]
                pred = _predicted_visibility(_block_matrix(amps, trial), key, x)
                err = abs(pred - records[key].visibility)
                if best is None or err < best[0] - 1e-15:
                    best = (err, sign)
            phases[r, c] = best[1] * magnitude[r, c]
            resolved[r, c] = True
            progress = True
        if not progress and first:
            # seed the sign convention on the first unresolved phase
            r, c = map(int, np.argwhere(~resolved)[0])
            resolved[r, c] = True
            progress = True
        first = False
    return phases


def _refine(phases, amps, records, x):
    rows, cols = amps.shape
    free = [(r, c) for r in range(1, rows) for c in range(1, cols)]
    keys = list(records)
    weights = np.array([1.0 / records[k].uncertainty if records[k].uncertainty > 0 else 1.0
                        for k in keys])
    observed = np.array([records[k].visibility for k in keys])

    def residuals(params):
        trial = phases.copy()
        for (r, c), p in zip(free, params):
            trial[r, c] = p
        mat = _block_matrix(amps, trial)
        pred = np.array([_predicted_visibility(mat, k, x) for k in keys])
        return (pred - observed) * weights

    start = np.array([phases[r, c] for r, c in free])
    r0 = residuals(start)
    if not np.any(r0):
        return phases, 0.0
    fit = least_squares(residuals, start, method="lm" if len(keys) >= len(free) else "trf")
    if 0.5 * np.sum(fit.fun ** 2) > 0.5 * np.sum(r0 ** 2):
        return phases, float(np.sqrt(np.mean(r0 ** 2)))
    out = phases.copy()
    for (r, c), p in zip(free, fit.x):
        out[r, c] = p
    return out, float(np.sqrt(np.mean(fit.fun ** 2)))


def reconstruct_block(amps, phases) -> np.ndarray:
    return np.asarray(amps) * np.exp(1j * np.asarray(phases))


@dataclass(frozen=True)
class ReconstructionResult:
    """Gauge-fixed matrix with the diagonal phases applied to reach it.

    ``matrix = diag(exp(i out_phases)) @ m @ diag(exp(i in_phases))``.
    """

    matrix: np.ndarray
    out_phases: np.ndarray
    in_phases: np.ndarray
    residual: float
    history: tuple[float, ...] = ()
    warnings: tuple[str, ...] = ()


def gauge_fix(m, target, tol: float = 1e-12, max_iter: int = 10_000) -> ReconstructionResult:
    """Diagonal phases minimizing ``||D_out m D_in - target||_F``.

    Alternates closed-form column and row updates from the identity gauge and
    stops when the residual decreases by less than ``tol``.
    """
    m = np.asarray(m, dtype=np.complex128)
    target = np.asarray(target, dtype=np.complex128)
    if m.shape != target.shape:
        raise DimensionError(f"shape mismatch {m.shape} vs {target.shape}")
    alpha = np.zeros(m.shape[0])
    beta = np.zeros(m.shape[1])

    def fixed():
        return np.exp(1j * alpha)[:, None] * m * np.exp(1j * beta)[None, :]

    history = [float(np.linalg.norm(fixed() - target))]
    for _ in range(max_iter):
        left = np.exp(1j * alpha)[:, None] * m
        beta = -np.angle(np.sum(left * target.conj(), axis=0))
        right = m * np.exp(1j * beta)[None, :]
        alpha = -np.angle(np.sum(right * target.conj(), axis=1))
        history.append(float(np.linalg.norm(fixed() - target)))
        if history[-2] - history[-1] < tol:
            break
    return ReconstructionResult(fixed(), np.mod(alpha, TWO_PI), np.mod(beta, TWO_PI),
                                history[-1], tuple(history))


def amplitude_fidelity(a, b, n: float | None = None, normalize: bool = True) -> float:
    """``(1/n) * sum_ij |a_ij| |b_ij|`` i.e. ``Tr(|a^dag| |b|) / n``.

    With ``normalize`` (default) both matrices' columns are scaled to unit
    norm first and ``n`` defaults to the column count.
    """
    a = np.abs(np.asarray(a))
    b = np.abs(np.asarray(b))
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if normalize:
        a = _normalize_columns(a)
        b = _normalize_columns(b)
    n = a.shape[1] if n is None else n
    if not n > 0:
        raise DimensionError("normalizer must be positive")
    return float(np.sum(a * b) / n)
