"""AWGN forward channel with a noiseless, unit-delay feedback link.

Noise comes from numpy's Philox counter-based generator keyed directly by
``(seed, stream_id)``, so any trial's noise can be regenerated in isolation
and parallel workers never share generator state.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ChannelConfig", "NoiseSequence", "draw_noise", "transmit",
           "stream_generator", "trial_stream_id", "noise_block", "message_block",
           "db_to_linear", "linear_to_db"]

_MASK64 = (1 << 64) - 1
# messages use the same per-trial key with the top bit of the stream id flipped
_MESSAGE_SALT = 1 << 63


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=np.float64) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=np.float64))


@dataclass(frozen=True)
class ChannelConfig:
    """Channel with input power normalized to 1 and ``SNR = 1 / noise_var``."""

    snr_linear: float
    power: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not (np.isfinite(self.snr_linear) and self.snr_linear > 0):
            raise ValueError(f"snr_linear must be positive, got {self.snr_linear}")
        object.__setattr__(self, "snr_linear", float(self.snr_linear))

    @classmethod
    def from_db(cls, snr_db):
        return cls(float(db_to_linear(snr_db)))

    @property
    def snr_db(self):
        return float(linear_to_db(self.snr_linear))

    @property
    def noise_std(self):
        return float(np.sqrt(self.power / self.snr_linear))


@dataclass(frozen=True)
class NoiseSequence:
    samples: np.ndarray
    seed: int
    stream_id: int

    def __len__(self):
        return len(self.samples)


def stream_generator(seed, stream_id):
    """A fresh Philox generator whose 128-bit key is ``(seed, stream_id)``."""
    key = np.array([int(seed) & _MASK64, int(stream_id) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def trial_stream_id(snr_index, trial):
    """Stream id of Monte-Carlo trial ``trial`` at sweep point ``snr_index``."""
    return ((int(snr_index) & 0x7FFFFFFF) << 32) | (int(trial) & 0xFFFFFFFF)


def draw_noise(cfg, n, seed, stream_id):
    """``n`` i.i.d. N(0, noise_std**2) samples determined by ``(seed, stream_id)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = stream_generator(seed, stream_id).standard_normal(n) * cfg.noise_std
    return NoiseSequence(samples=z, seed=int(seed), stream_id=int(stream_id))


def noise_block(cfg, n, seed, stream_ids):
    """Stack of per-stream noise rows, shape ``(len(stream_ids), n)``.

    Row ``t`` equals ``draw_noise(cfg, n, seed, stream_ids[t]).samples``.
    """
    out = np.empty((len(stream_ids), n))
    for t, sid in enumerate(stream_ids):
        out[t] = stream_generator(seed, sid).standard_normal(n)
    return out * cfg.noise_std


def message_block(log2_m, seed, stream_ids):
    """Uniform message indices in ``[0, 2**log2_m)``, one per stream id."""
    m = 1 << int(log2_m)
    return np.array(
        [stream_generator(seed, sid ^ _MESSAGE_SALT).integers(0, m) for sid in stream_ids],
        dtype=np.int64,
    )


def transmit(x, z):
    """Physical channel ``y = x + z`` in binary64.

    The receiver rounds ``y`` to its own working precision before use.
    """
    return np.asarray(x, dtype=np.float64) + np.asarray(z, dtype=np.float64) \
        if np.ndim(x) or np.ndim(z) else float(x) + float(z)
