"""Fock-state interference through a linear transfer matrix.

``e[k, i]`` is the amplitude for a photon entering mode ``i`` to leave by
mode ``k``. Detectors are threshold detectors: only patterns with distinct
output modes register as coincidences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError, ResourceError, UndefinedVisibilityError

MAX_PERMANENT_SIZE = 30
SPEED_OF_LIGHT = 299_792_458.0

FockState = tuple[int, ...]


@dataclass(frozen=True)
class CountRecord:
    """Counts registered for one input/output setting.

    ``output_pattern`` lists the clicking output modes (one for a singles
    measurement, two for a coincidence).
    """

    input_modes: tuple[int, ...]
    output_pattern: tuple[int, ...]
    counts: int
    integration_time: float

    def __post_init__(self):
        if self.counts < 0:
            raise DomainError("counts must be non-negative")
        if not self.integration_time > 0:
            raise DomainError("integration time must be positive")
        object.__setattr__(self, "input_modes", tuple(int(i) for i in self.input_modes))
        object.__setattr__(self, "output_pattern", tuple(int(i) for i in self.output_pattern))
        object.__setattr__(self, "counts", int(self.counts))


@dataclass(frozen=True)
class VisibilityRecord:
    inputs: tuple[int, int]
    outputs: tuple[int, int]
    visibility: float
    uncertainty: float = 0.0

    def __post_init__(self):
        if self.inputs[0] == self.inputs[1] or self.outputs[0] == self.outputs[1]:
            raise DomainError("HOM inputs and outputs must be distinct mode pairs")
        if self.visibility > 1 + 1e-12:
            raise DomainError(f"visibility {self.visibility} exceeds 1")
        if self.uncertainty < 0:
            raise DomainError("uncertainty must be non-negative")
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(i) for i in self.outputs))


def permanent(a) -> complex:
    """Matrix permanent (Gray-code Ryser, O(2^n n))."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_PERMANENT_SIZE:
        raise ResourceError(f"permanent of a {a.shape[0]}x{a.shape[0]} matrix exceeds the n<=30 limit")
    return complex(kernels.permanent_ryser(a))


def _expand(occupations: Sequence[int]) -> list[int]:
    idx = []
    for mode, k in enumerate(occupations):
        if k < 0:
            raise DomainError("occupations must be non-negative")
        idx.extend([mode] * int(k))
    return idx


def transition_amplitude(e, inp: Sequence[int], out: Sequence[int]) -> complex:
    """``Per(E_sub) / sqrt(prod s! prod t!)``."""
    e = np.asarray(e, dtype=np.complex128)
    if len(inp) != e.shape[1] or len(out) != e.shape[0]:
        raise DimensionError(
            f"Fock states of length {len(inp)}->{len(out)} do not fit a {e.shape} transfer matrix")
    if sum(inp) != sum(out):
        raise DomainError(f"photon number mismatch: {sum(inp)} in, {sum(out)} out")
    cols, rows = _expand(inp), _expand(out)
    norm = math.prod(math.factorial(k) for k in inp) * math.prod(math.factorial(k) for k in out)
    return permanent(e[np.ix_(rows, cols)]) / math.sqrt(norm)


def transition_probability(e, inp: Sequence[int], out: Sequence[int]) -> float:
    return abs(transition_amplitude(e, inp, out)) ** 2


def fock_outputs(n_modes: int, n_photons: int) -> Iterable[FockState]:
    """All occupation tuples of ``n_photons`` in ``n_modes`` modes."""
    if n_modes == 1:
        yield (n_photons,)
        return
    for k in range(n_photons, -1, -1):
        for rest in fock_outputs(n_modes - 1, n_photons - k):
            yield (k, *rest)


def two_photon_coincidence(e, i: int, j: int, k: int, l: int, x: float) -> float:
    """Probability of one photon in each of ``k`` and ``l`` for inputs ``i``, ``j``.

    ``x`` is the wavefunction overlap; only the interference term depends on it.
    """
    if i == j or k == l:
        raise DomainError("inputs and outputs must be distinct modes")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"overlap x={x} outside [0, 1]")
    e = np.asarray(e)
    direct = e[k, i] * e[l, j]
    swapped = e[k, j] * e[l, i]
    return float(abs(direct) ** 2 + abs(swapped) ** 2
                 + 2 * x ** 2 * (direct * np.conj(swapped)).real)


def hom_visibility(e, i: int, j: int, k: int, l: int, x: float) -> float:
    p_dist = two_photon_coincidence(e, i, j, k, l, 0.0)
    if p_dist == 0.0:
        raise UndefinedVisibilityError(
            f"no distinguishable-photon coincidences for inputs ({i},{j}) outputs ({k},{l})")
    return (p_dist - two_photon_coincidence(e, i, j, k, l, x)) / p_dist


def coherence_time_from_bandwidth(fwhm_nm: float = 12.0, center_nm: float = 1550.0) -> float:
    """1/e^2-style temporal width (s) of the overlap envelope for a Gaussian filter.

    A Gaussian spectral intensity with frequency std ``sigma_w`` gives an
    overlap ``exp(-sigma_w^2 tau^2 / 2)``; the returned time is ``1/sigma_w``.
    """
    if fwhm_nm <= 0 or center_nm <= 0:
        raise DomainError("bandwidth and centre wavelength must be positive")
    fwhm_hz = SPEED_OF_LIGHT * fwhm_nm * 1e-9 / (center_nm * 1e-9) ** 2
    sigma_w = 2 * np.pi * fwhm_hz / (2 * np.sqrt(2 * np.log(2)))
    return float(1.0 / sigma_w)


def overlap_at_delay(delays, x0: float, coherence_time: float) -> np.ndarray:
    if not coherence_time > 0:
        raise DomainError("coherence time must be positive")
    tau = np.asarray(delays, dtype=float)
    return x0 * np.exp(-tau ** 2 / (2 * coherence_time ** 2))


def hom_delay_scan(e, i, j, k, l, delays, x0: float, coherence_time: float) -> np.ndarray:
    """Coincidence probability versus relative delay (the HOM dip)."""
    xs = overlap_at_delay(delays, x0, coherence_time)
    return np.array([two_photon_coincidence(e, i, j, k, l, float(x)) for x in xs])


def dip_model(tau, baseline, visibility, center, width):
    return baseline * (1 - visibility * np.exp(-((tau - center) / width) ** 2))


def fit_hom_dip(delays, counts, width_guess: float) -> tuple[float, float]:
    """Least-squares fit of a Gaussian dip to Poisson counts.

    Returns the visibility and its standard error.
    """
    from scipy.optimize import curve_fit

    delays = np.asarray(delays, dtype=float)
    counts = np.asarray(counts, dtype=float)
    base = float(np.median(counts[np.argsort(np.abs(delays))[-max(3, len(delays) // 4):]]))
    vis0 = 1 - counts.min() / base if base > 0 else 0.5
    sigma = np.sqrt(np.maximum(counts, 1.0))
    popt, pcov = curve_fit(dip_model, delays, counts, p0=[base, vis0, 0.0, width_guess],
                           sigma=sigma, absolute_sigma=True, maxfev=20000)
    return float(popt[1]), float(np.sqrt(pcov[1, 1]))


def sample_counts(p: float, pair_rate: float, time: float, seed,
                  input_modes=(), output_pattern=()) -> CountRecord:
    """Poisson counts with mean ``p * pair_rate * time``."""
    if not 0.0 <= p <= 1.0 + 1e-12:
        raise DomainError(f"probability {p} outside [0, 1]")
    if not pair_rate > 0 or not time > 0:
        raise DomainError("rate and integration time must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = int(rng.poisson(min(p, 1.0) * pair_rate * time))
    return CountRecord(tuple(input_modes), tuple(output_pattern), counts, float(time))
