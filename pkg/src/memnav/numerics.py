"""Small deterministic vector kernels used by every memory policy.

Feature vectors are plain 1-D ``float64`` numpy arrays of length ``d_model``.
Positional encodings share that layout: channel ``2i`` holds a sine and
channel ``2i + 1`` the cosine of the same argument.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

DEFAULT_D_MODEL = 64
MAX_TEMPORAL_GAP = 128
PE_BASE = 10000.0


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DomainError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    return v


def normalize(x, name: str = "vector") -> np.ndarray:
    """Return ``x / ||x||``. The zero vector is rejected."""
    v = _as_vector(x, name)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DomainError(f"{name} is the zero vector and cannot be normalized")
    return v / n


def cosine_sim(a, b) -> float:
    """Cosine similarity of two nonzero finite vectors, clamped to [-1, 1]."""
    va = _as_vector(a, "a")
    vb = _as_vector(b, "b")
    if va.shape != vb.shape:
        raise DomainError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    if na == 0.0:
        raise DomainError("a has zero norm")
    nb = float(np.linalg.norm(vb))
    if nb == 0.0:
        raise DomainError("b has zero norm")
    s = float(np.dot(va, vb)) / (na * nb)
    return min(1.0, max(-1.0, s))


def neg_exp_weights(sigmas) -> np.ndarray:
    """Normalized ``exp(-sigma)`` weights, stabilized by subtracting ``min(sigma)``.

    Lower uncertainty gives a strictly larger weight; the result sums to one.
    """
    s = np.asarray(sigmas, dtype=np.float64).reshape(-1)
    if s.size == 0:
        raise DomainError("sigmas is empty")
    if not np.all(np.isfinite(s)):
        raise DomainError("sigmas has non-finite entries")
    if np.any(s < 0):
        raise DomainError("sigmas must be >= 0")
    # max over -sigma is -min(sigma)
    e = np.exp(-(s - s.min()))
    return e / e.sum()


def _frequencies(d_model: int) -> np.ndarray:
    if d_model <= 0 or d_model % 2:
        raise DomainError(f"d_model must be a positive even integer, got {d_model}")
    i = np.arange(d_model // 2, dtype=np.float64)
    return 1.0 / PE_BASE ** (2.0 * i / d_model)


def _sinusoid(position: float, d_model: int) -> np.ndarray:
    arg = position * _frequencies(d_model)
    out = np.empty(d_model, dtype=np.float64)
    out[0::2] = np.sin(arg)
    out[1::2] = np.cos(arg)
    return out


def pe_original(pos: int, d_model: int = DEFAULT_D_MODEL) -> np.ndarray:
    """Sinusoidal encoding of an integer position (window order)."""
    if pos < 0:
        raise DomainError(f"pos must be >= 0, got {pos}")
    return _sinusoid(float(pos), d_model)


def clamped_gap(t: int, p: int, max_gap: int = MAX_TEMPORAL_GAP) -> float:
    """``min(|t - p|, max_gap) / max_gap``, a value in [0, 1]."""
    if t < 0 or p < 0:
        raise DomainError(f"frame indices must be >= 0, got t={t}, p={p}")
    return min(abs(t - p), max_gap) / max_gap


def pe_improved(t: int, p: int, d_model: int = DEFAULT_D_MODEL,
                max_gap: int = MAX_TEMPORAL_GAP) -> np.ndarray:
    """Sinusoidal encoding of the clamped, normalized frame-index gap.

    Symmetric in ``(t, p)`` and constant for every gap of ``max_gap`` or more.
    """
    return _sinusoid(clamped_gap(t, p, max_gap), d_model)


def encoding_norm(d_model: int) -> float:
    """Euclidean norm shared by every interleaved sin/cos encoding."""
    return math.sqrt(d_model / 2)
