"""Seeded sampling primitives: uniform, normal, gamma, Poisson, noncentral chi-squared.

Streams are counter-based (Philox) and fully determined by ``(seed, stream_id)``,
so a stream for path block *b* can be created on any worker, in any order, and
always yields the same draws. All samplers accept an optional ``size`` and are
vectorized; scalar calls return plain Python floats/ints.

The noncentral chi-squared sampler is the exactness workhorse of the CIR
transition. It uses the Poisson mixture representation

    N ~ Poisson(noncentrality / 2),  X | N ~ Gamma((dof + 2 N) / 2, scale=2),

which is exact for every dof > 0, including dof < 1 (needed when the Feller
condition fails). Gamma draws with shape < 1 use the shape+1 boost with a
uniform power correction rather than a small-shape rejection sampler.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# A Poisson rate this large means the CIR noncentrality blew up, i.e. a
# mis-scaled time step; refuse instead of sampling garbage.
MAX_POISSON_RATE = 1.0e9

_UINT64_MAX = 2**64


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Two streams built from the same key produce bit-identical sequences;
    streams with distinct ``stream_id`` are statistically independent.
    The Philox counter advances as draws are consumed.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            value = int(value)
            if not 0 <= value < _UINT64_MAX:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass(frozen=True)
class NoncentralChiSqParams:
    """Degrees of freedom and noncentrality of a noncentral chi-squared law.

    ``noncentrality`` may be an array (one value per path); ``dof`` is
    typically scalar but arrays broadcast.
    """

    dof: float | np.ndarray
    noncentrality: float | np.ndarray

    def __post_init__(self):
        dof = np.asarray(self.dof, dtype=np.float64)
        lam = np.asarray(self.noncentrality, dtype=np.float64)
        if not np.all(np.isfinite(dof)) or np.any(dof <= 0.0):
            raise ValueError("dof must be finite and > 0")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0.0):
            raise ValueError("noncentrality must be finite and >= 0")


def _as_scalar_or_array(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def sample_uniform(stream: RngStream, size=None):
    """Uniform draw(s) on [0, 1)."""
    return _as_scalar_or_array(stream.generator.random(size=size))


def sample_standard_normal(stream: RngStream, size=None):
    """Standard normal draw(s)."""
    return _as_scalar_or_array(stream.generator.standard_normal(size=size))


def sample_gamma(stream: RngStream, shape, scale, size=None):
    """Gamma(shape, scale) draw(s), valid for every shape > 0.

    Shapes >= 1 sample directly (Marsaglia-Tsang under the hood). Shapes < 1
    use the exact boost Gamma(a) = Gamma(a + 1) * U^(1/a); the correction
    uses 1 - U so the result stays strictly positive. When any element of a
    vector draw has shape < 1 the call consumes one gamma batch plus one
    uniform batch, in that order.
    """
    shape_arr = np.asarray(shape, dtype=np.float64)
    scale_arr = np.asarray(scale, dtype=np.float64)
    if not np.all(np.isfinite(shape_arr)) or np.any(shape_arr <= 0.0):
        raise ValueError("gamma shape must be finite and > 0")
    if not np.all(np.isfinite(scale_arr)) or np.any(scale_arr <= 0.0):
        raise ValueError("gamma scale must be finite and > 0")
    gen = stream.generator
    small = shape_arr < 1.0
    if not np.any(small):
        return _as_scalar_or_array(gen.standard_gamma(shape_arr, size=size) * scale_arr)
    boosted = np.where(small, shape_arr + 1.0, shape_arr)
    draw = gen.standard_gamma(boosted, size=size)
    u = gen.random(size=np.shape(draw) if np.ndim(draw) else None)
    correction = np.exp(np.log1p(-u) / np.where(small, shape_arr, 1.0))
    draw = np.where(small, draw * correction, draw)
    return _as_scalar_or_array(draw * scale_arr)


def sample_poisson(stream: RngStream, rate, size=None):
    """Poisson(rate) draw(s); rate 0 returns 0 deterministically."""
    rate_arr = np.asarray(rate, dtype=np.float64)
    if not np.all(np.isfinite(rate_arr)) or np.any(rate_arr < 0.0):
        raise ValueError("poisson rate must be finite and >= 0")
    if np.any(rate_arr > MAX_POISSON_RATE):
        raise ValueError(
            f"poisson rate above {MAX_POISSON_RATE:.0e}: noncentrality blew up, "
            "check the time step scaling"
        )
    out = stream.generator.poisson(rate_arr, size=size)
    return _as_scalar_or_array(out)


def sample_noncentral_chisq(stream: RngStream, params: NoncentralChiSqParams, size=None):
    """Noncentral chi-squared draw(s) via the Poisson mixture of gammas.

    Always >= 0; exact for all dof > 0. Consumption order per call:
    one Poisson batch, then one gamma batch (plus its uniform correction
    batch when any mixed shape falls below 1).
    """
    lam_half = np.asarray(params.noncentrality, dtype=np.float64) / 2.0
    mix = sample_poisson(stream, lam_half, size=size)
    mixed_shape = (np.asarray(params.dof, dtype=np.float64) + 2.0 * np.asarray(mix)) / 2.0
    return sample_gamma(stream, mixed_shape, 2.0)
