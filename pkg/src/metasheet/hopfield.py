"""Hopfield associative memory over +/-1 spins.

Weights come either from Hebbian summation over patterns or from per-pair
inversion-difference counts ``U`` measured by the memristors. ``U`` is stored
row-major over the upper triangle, so for N = 4 the order is
(0,1), (0,2), (0,3), (1,2), (1,3), (2,3).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from .errors import CalibrationError, InputError

TIE_RULES = ("hold", "plus")
SUCCESS_RULES = ("source", "any", "exact")
NOISE_LAWS = ("normal", "clip", "truncate")
MODES = ("verbatim", "hebbian_equiv")


def as_patterns(patterns) -> np.ndarray:
    arr = np.asarray(patterns)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.size == 0 or arr.ndim != 2:
        raise InputError("need a non-empty list of equal-length patterns")
    if not np.isin(arr, (-1, 1)).all():
        raise InputError("pattern entries must be -1 or +1")
    return arr.astype(np.int64)


def parse_pattern(text: str) -> np.ndarray:
    """``"+-+-"`` -> array([1, -1, 1, -1])."""
    lut = {"+": 1, "-": -1}
    try:
        return np.array([lut[c] for c in text.strip()], dtype=np.int64)
    except KeyError:
        raise InputError(f"pattern must use only '+' and '-', got {text!r}") from None


def format_pattern(s) -> str:
    return "".join("+" if v > 0 else "-" for v in s)


def upper_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def size_from_pairs(m: int) -> int:
    n = (1 + math.isqrt(1 + 8 * m)) // 2
    if n * (n - 1) // 2 != m or n < 2:
        raise InputError(f"{m} pair entries do not form an upper triangle")
    return n


def _check_list(patterns):
    try:
        return as_patterns(patterns)
    except ValueError as exc:  # ragged input
        if isinstance(exc, InputError):
            raise
        raise InputError("patterns have mixed lengths") from None


def hebbian_matrix(patterns) -> np.ndarray:
    xi = _check_list(patterns).astype(float)
    j = xi.T @ xi
    np.fill_diagonal(j, 0.0)
    return j


def u_from_patterns(patterns) -> np.ndarray:
    xi = _check_list(patterns)
    return np.array([int(np.count_nonzero(xi[:, i] != xi[:, j]))
                     for i, j in upper_pairs(xi.shape[1])], dtype=np.int64)


def u_from_voltages(v0, vf, dv) -> np.ndarray:
    """Counts from read-voltage drops: round((v0 - vf) / dv), floored at 0."""
    v0, vf, dv = (np.asarray(a, dtype=float) for a in (v0, vf, dv))
    if np.any(dv <= 0):
        bad = int(np.flatnonzero(dv <= 0)[0])
        raise CalibrationError(f"non-positive calibration step on device {bad}", device=bad)
    return np.maximum(np.rint((v0 - vf) / dv), 0).astype(np.int64)


def assemble_jm(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = size_from_pairs(u.size)
    jm = np.zeros((n, n))
    for k, (i, j) in enumerate(upper_pairs(n)):
        jm[i, j] = jm[j, i] = u[k]
    return jm


def transform_weights(jm, mode: str = "hebbian_equiv", p: int | None = None) -> np.ndarray:
    """Map count matrix to Hopfield weights.

    ``verbatim``: J = -2 J^M + max(J^M) I.
    ``hebbian_equiv``: off-diagonal p - 2U, zero diagonal; equals the Hebbian
    matrix of the patterns that produced U.
    """
    jm = np.asarray(jm, dtype=float)
    if not np.array_equal(jm, jm.T):
        raise InputError("count matrix must be symmetric")
    mode = mode.replace("-", "_")
    if mode == "verbatim":
        return -2.0 * jm + jm.max() * np.eye(len(jm))
    if mode == "hebbian_equiv":
        if p is None:
            raise InputError("hebbian_equiv needs the pattern count p")
        j = p - 2.0 * jm
        np.fill_diagonal(j, 0.0)
        return j
    raise InputError(f"unknown weight mode {mode!r}")


def energy(j, s) -> float:
    j = np.asarray(j, dtype=float)
    s = np.asarray(s, dtype=float)
    if j.shape != (s.size, s.size):
        raise InputError("weight matrix and state sizes differ")
    return float(-0.5 * s @ j @ s)


def all_states(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int64)


def _sgn(h, current, tie):
    out = np.where(h > 0, 1, -1)
    zero = h == 0
    if tie == "plus":
        out[zero] = 1
    else:
        out[zero] = np.asarray(current)[zero]
    return out


def sync_update(j, s, tie: str = "plus") -> np.ndarray:
    s = np.asarray(s, dtype=np.int64)
    return _sgn(np.asarray(j, dtype=float) @ s, s, tie)


def is_fixed_point(j, s, tie: str = "plus") -> bool:
    return bool(np.array_equal(sync_update(j, s, tie), s))


@dataclass(frozen=True)
class Retrieval:
    state: np.ndarray
    iterations: int
    converged: bool


def _tie_flag(tie):
    if tie not in TIE_RULES:
        raise InputError(f"tie rule must be one of {TIE_RULES}")
    return tie == "hold"


def async_retrieve(j, start, max_iter: int = 20, updates_per_iter: int = 4, rng=None,
                   tie: str = "plus") -> Retrieval:
    """Random single-neuron updates, ``updates_per_iter`` per iteration.

    Stops early at a fixed point; ``converged`` is False if the cap was hit
    on a state that still has a misaligned neuron.
    """
    start = as_patterns(start)
    n = start.shape[1]
    rng = np.random.default_rng() if rng is None else rng
    idx = rng.integers(0, n, size=(1, max_iter * updates_per_iter))
    fin, its, conv = kernels.retrieve_batch(np.asarray(j, dtype=float), start, idx,
                                            updates_per_iter, _tie_flag(tie))
    return Retrieval(np.asarray(fin[0]), int(its[0]), bool(conv[0]))


def corrupt_with(xi, eta) -> np.ndarray:
    return np.where(np.asarray(xi) + eta >= 0, 1, -1).astype(np.int64)


def _noise(z, u, sigma, law):
    if law == "normal":
        return sigma * z
    if law == "clip":
        return np.clip(sigma * z, -1.0, 1.0)
    if law == "truncate":
        if sigma == 0:
            return np.zeros_like(u)
        lo = ndtr(-1.0 / sigma)
        return sigma * ndtri(lo + u * (1.0 - 2.0 * lo))
    raise InputError(f"noise law must be one of {NOISE_LAWS}")


def corrupt(p, sigma: float, rng, law: str = "normal") -> np.ndarray:
    """Add zero-mean noise of std ``sigma`` to each spin and take the sign (0 -> +1)."""
    if sigma < 0:
        raise InputError("sigma must be non-negative")
    p = np.asarray(p)
    z = rng.standard_normal(p.size)
    u = rng.random(p.size)
    return corrupt_with(p, _noise(z, u, sigma, law))


def flip_probability(sigma: float, law: str = "normal") -> float:
    """Per-spin flip chance for a +1 spin (the -1 case is equal up to a null set)."""
    if sigma == 0 or law == "truncate":
        return 0.0
    return float(ndtr(-1.0 / sigma))


@dataclass(frozen=True)
class TrialDraws:
    which: np.ndarray  # (T,) index of the presented pattern
    z: np.ndarray  # (T, N) standard normals
    u: np.ndarray  # (T, N) uniforms
    idx: np.ndarray  # (T, max_iter * updates) neuron picks


def draw_trials(seed: int, trials: int, n: int, p: int, steps: int) -> TrialDraws:
    """Independent per-trial streams so any trial can be replayed on its own."""
    which = np.empty(trials, dtype=np.int64)
    z = np.empty((trials, n))
    u = np.empty((trials, n))
    idx = np.empty((trials, steps), dtype=np.int64)
    for t, ss in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(ss)
        which[t] = rng.integers(p)
        z[t] = rng.standard_normal(n)
        u[t] = rng.random(n)
        idx[t] = rng.integers(0, n, size=steps)
    return TrialDraws(which, z, u, idx)


@dataclass(frozen=True)
class Accuracy:
    accuracy: float
    histogram: dict  # bit errors -> probability among failures
    failures: int
    unconverged: int
    trials: int


def _matches(final, xi, presented, success):
    if success == "exact":
        return np.all(final == presented, axis=1)
    if success == "source":
        return np.all(final == presented, axis=1) | np.all(final == -presented, axis=1)
    hits = np.zeros(len(final), dtype=bool)
    for q in xi:
        hits |= np.all(final == q, axis=1) | np.all(final == -q, axis=1)
    return hits


def accuracy_from_draws(j, stored, draws: TrialDraws, sigma: float, updates_per_iter: int = 4,
                        tie: str = "plus", success: str = "any", law: str = "normal") -> Accuracy:
    if success not in SUCCESS_RULES:
        raise InputError(f"success rule must be one of {SUCCESS_RULES}")
    xi = as_patterns(stored)
    presented = xi[draws.which]
    starts = corrupt_with(presented, _noise(draws.z, draws.u, sigma, law))
    final, _, conv = kernels.retrieve_batch(np.asarray(j, dtype=float), starts, draws.idx,
                                            updates_per_iter, _tie_flag(tie))
    final = np.asarray(final)
    ok = _matches(final, xi, presented, success)
    errs = np.minimum(np.count_nonzero(final != presented, axis=1),
                      np.count_nonzero(final != -presented, axis=1))
    bad = errs[~ok]
    hist = {}
    if bad.size:
        vals, counts = np.unique(bad, return_counts=True)
        hist = {int(v): float(c) / bad.size for v, c in zip(vals, counts)}
    trials = len(final)
    return Accuracy(float(np.count_nonzero(ok)) / trials, hist, int(bad.size),
                    int(np.count_nonzero(np.asarray(conv) == 0)), trials)


def evaluate_accuracy(j, stored, trials: int = 3000, sigma: float = 0.5, seed: int = 0,
                      max_iter: int = 20, updates_per_iter: int = 4, tie: str = "plus",
                      success: str = "any", law: str = "normal") -> Accuracy:
    """Present ``trials`` corrupted copies of random stored patterns and retrieve."""
    if trials < 1:
        raise InputError("trials must be >= 1")
    xi = as_patterns(stored)
    draws = draw_trials(seed, trials, xi.shape[1], len(xi), max_iter * updates_per_iter)
    return accuracy_from_draws(j, xi, draws, sigma, updates_per_iter, tie, success, law)


def calibrate_sigma(j, stored, target: float, grid=None, trials: int = 3000, seed: int = 0,
                    max_iter: int = 20, updates_per_iter: int = 4, tie: str = "plus",
                    success: str = "any", law: str = "normal"):
    """Grid value of sigma whose accuracy lands closest to ``target``.

    All grid points share one set of trial draws. Returns ``(sigma, accuracy)``.
    """
    grid = np.round(np.arange(0.30, 0.8001, 0.01), 2) if grid is None else np.asarray(grid)
    xi = as_patterns(stored)
    draws = draw_trials(seed, trials, xi.shape[1], len(xi), max_iter * updates_per_iter)
    best = None
    for sigma in grid:
        acc = accuracy_from_draws(j, xi, draws, float(sigma), updates_per_iter, tie, success, law)
        gap = abs(acc.accuracy - target)
        if best is None or gap < best[0]:
            best = (gap, float(sigma), acc.accuracy)
    return best[1], best[2]


@dataclass(frozen=True)
class LandscapeProjection:
    states: np.ndarray  # (K, N)
    points: np.ndarray  # (K, 3): v1, v2, energy
    axes: np.ndarray  # (2, N), orthonormal rows


def project_landscape(j, stored=None, n_samples: int | None = None, rng=None,
                      enumerate_up_to: int = 12, states=None) -> LandscapeProjection:
    """Project states onto the two leading principal axes, keeping energies.

    Small networks use every state; larger ones draw ``n_samples`` uniform
    states (or take ``states`` as given). Stored patterns and their
    reflections always join the sample set, which keeps the mean at zero and
    breaks the isotropy of the full cube.
    """
    j = np.asarray(j, dtype=float)
    n = len(j)
    if states is not None:
        states = as_patterns(states)
    elif n <= enumerate_up_to:
        states = all_states(n)
    else:
        if n_samples is None or n_samples < n:
            raise InputError("n_samples must be at least N")
        rng = np.random.default_rng() if rng is None else rng
        states = np.where(rng.random((n_samples, n)) < 0.5, 1, -1)
    sample = states
    if stored is not None:
        xi = as_patterns(stored)
        sample = np.vstack([states, xi, -xi])
    sample = sample.astype(float)
    centred = sample - sample.mean(axis=0)
    cov = centred.T @ centred / len(sample)
    if not np.any(cov):
        raise InputError("all sampled states are equal; covariance is degenerate")
    w, vecs = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1][:2]
    axes = vecs[:, order].T
    # fix the sign of each axis for reproducible output
    for k in range(2):
        lead = np.flatnonzero(np.abs(axes[k]) > 1e-12)[0]
        if axes[k, lead] < 0:
            axes[k] = -axes[k]
    proj = states @ axes.T
    e = np.array([energy(j, s) for s in states])
    return LandscapeProjection(states, np.column_stack([proj, e]), axes)
