"""Propagation model and per-resource-block throughput.

Linear gain between UE ``i`` and eNodeB ``b`` on resource block ``z`` is

    G = 10 ** (-(PL(d) + X) / 10) * |h(t)|**2

with ``PL(d) = 128.1 + 37.6 log10(d)`` (d in km), static log-normal
shadowing ``X`` drawn once per 180 kHz chunk, and a Rayleigh envelope
``h`` evolved by a sum-of-sinusoids generator with the configured Doppler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .utility import DomainError

PL_INTERCEPT_DB = 128.1
PL_SLOPE_DB = 37.6


def _shape(size) -> tuple:
    return (int(size),) if np.isscalar(size) else tuple(int(n) for n in size)


@dataclass(frozen=True)
class RbGrid:
    """``num_freq`` chunks of 12 subcarriers times ``num_slots`` slots.

    Resource blocks are numbered slot-major: ``z = q * num_freq + f``.
    """

    num_freq: int = 100
    num_slots: int = 2

    def __post_init__(self):
        if self.num_freq < 1 or self.num_slots < 1:
            raise ValueError(f"RbGrid needs num_freq >= 1 and num_slots >= 1, got {self.num_freq}x{self.num_slots}")

    @property
    def size(self) -> int:
        return self.num_freq * self.num_slots

    def chunk_of(self, z):
        return np.asarray(z) % self.num_freq

    def slot_of(self, z):
        return np.asarray(z) // self.num_freq


def path_loss_db(d_km):
    """Distance-dependent loss in dB (no shadowing, no fading)."""
    d = np.asarray(d_km, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError(f"distance must be positive, got {d_km}")
    out = PL_INTERCEPT_DB + PL_SLOPE_DB * np.log10(d)
    return float(out) if out.ndim == 0 else out


def sample_shadowing(rng: np.random.Generator, num_freq: int, std_db: float = 8.0, size=()):
    """Independent zero-mean normal dB offsets, one per frequency chunk.

    ``size`` prepends extra axes (e.g. UE and eNodeB) to the chunk axis.
    """
    return rng.normal(0.0, std_db, size=_shape(size) + (num_freq,))


class FadingProcess:
    """Rayleigh fast fading for an array of independent chunks.

    Each chunk carries ``num_sinusoids`` unit phasors with uniformly random
    phases; the Doppler shifts ``doppler * cos(alpha_n)`` use arrival
    angles ``alpha_n = 2*pi*(n + 1/4)/M`` shared by all chunks, which keeps
    the frequencies distinct (so the time-averaged power is exactly one)
    and turns the per-step evaluation into a single matrix product.
    """

    def __init__(self, rng: np.random.Generator, shape, doppler_hz: float = 5.0, num_sinusoids: int = 128):
        if doppler_hz < 0:
            raise ValueError(f"doppler_hz must be >= 0, got {doppler_hz}")
        self.shape = _shape(shape)
        self.doppler_hz = float(doppler_hz)
        self.num_sinusoids = int(num_sinusoids)
        n = int(np.prod(self.shape, dtype=int))
        m = self.num_sinusoids
        self._phasors = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(n, m)))
        alpha = 2.0 * np.pi * (np.arange(m) + 0.25) / m
        self._omega = 2.0 * np.pi * self.doppler_hz * np.cos(alpha)
        self.t = 0.0

    @classmethod
    def stack(cls, processes) -> "FadingProcess":
        """Join same-configuration processes along a new leading axis."""
        first = processes[0]
        for p in processes[1:]:
            if (p.shape, p.doppler_hz, p.num_sinusoids, p.t) != (first.shape, first.doppler_hz, first.num_sinusoids, first.t):
                raise ValueError("can only stack processes with identical shape, Doppler, size and time")
        out = cls.__new__(cls)
        out.shape = (len(processes),) + first.shape
        out.doppler_hz = first.doppler_hz
        out.num_sinusoids = first.num_sinusoids
        out._phasors = np.concatenate([p._phasors for p in processes])
        out._omega = first._omega
        out.t = first.t
        return out

    def power(self) -> np.ndarray:
        """``|h|^2`` at the current time, shaped like ``self.shape``."""
        h = self._phasors @ np.exp(1j * self._omega * self.t)
        return ((h.real**2 + h.imag**2) / self.num_sinusoids).reshape(self.shape)

    def step(self, dt: float) -> np.ndarray:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.t += dt
        return self.power()


def step_fast_fading(fp: FadingProcess, dt: float) -> np.ndarray:
    """Advance ``fp`` by ``dt`` seconds and return ``|h|^2`` per chunk."""
    return fp.step(dt)


def rb_throughput(W, gain, power, noise, interference=0.0):
    """Shannon rate ``W * log2(1 + gain * power / (noise + interference))``."""
    return W * np.log2(1.0 + np.asarray(gain) * power / (np.asarray(noise) + interference))


@dataclass(frozen=True)
class ChannelRealization:
    """Snapshot of linear gains and noise for one frame.

    ``gain`` has shape ``(..., n_ues, n_enbs, n_rbs)`` and ``noise``
    ``(..., n_ues, n_rbs)``. Leading axes index Monte Carlo replicas.
    """

    gain: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        if np.any(~(self.gain > 0)):
            raise ValueError("channel gains must be positive")
        if np.any(~(self.noise > 0)):
            raise ValueError("noise powers must be positive")

    def throughput(self, powers, serving, W) -> np.ndarray:
        """Per-RB rate of every UE when served by ``serving``.

        ``powers`` is ``(..., n_enbs, n_rbs)`` watts and ``serving`` an
        integer array ``(..., n_ues)`` of eNodeB indices.
        """
        powers = np.asarray(powers, dtype=float)
        serving = np.asarray(serving)
        rx = self.gain * powers[..., None, :, :]  # (..., U, B, Z)
        own = np.take_along_axis(rx, serving[..., :, None, None], axis=-2)[..., 0, :]
        interference = rx.sum(axis=-2) - own
        return W * np.log2(1.0 + own / (self.noise + interference))


def distances_km(ue_pos, enb_pos, min_distance_m: float = 0.0) -> np.ndarray:
    """UE to eNodeB distances in km, ``(..., n_ues, n_enbs)``."""
    ue_pos = np.asarray(ue_pos, dtype=float)
    enb_pos = np.asarray(enb_pos, dtype=float)
    d = np.linalg.norm(ue_pos[..., :, None, :] - enb_pos[None, :, :], axis=-1)
    return np.maximum(d, min_distance_m) / 1000.0


def large_scale_gain(d_km, shadow_db) -> np.ndarray:
    """Linear gain from path loss plus shadowing.

    ``d_km`` is ``(..., U, B)`` and ``shadow_db`` ``(..., U, B, F)``.
    """
    loss_db = path_loss_db(d_km)[..., None] + shadow_db
    return 10.0 ** (-loss_db / 10.0)


def serving_cells(static_gain) -> np.ndarray:
    """Attach each UE to the eNodeB with the largest mean large-scale gain."""
    return np.argmax(np.mean(static_gain, axis=-1), axis=-1)


def expand_chunks(per_chunk, grid: RbGrid) -> np.ndarray:
    """Repeat a per-chunk array (last axis ``F``) over every slot: last axis ``Z``."""
    return np.tile(per_chunk, (1,) * (np.ndim(per_chunk) - 1) + (grid.num_slots,))
