"""
Per-slot fading gains.

Exponential gains are drawn from a Philox counter-based generator: the
key is ``(seed, stream)`` and slot ``t`` owns a fixed block of counters,
so any slot (or block of slots) can be regenerated without history.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DETERMINISTIC = "deterministic"
IID_EXPONENTIAL = "iid_exponential"

STRONG_GAIN = 1.0
WEAK_GAIN = 0.2

CHANNEL_STREAM = 0


def two_class_gains(K, strong=STRONG_GAIN, weak=WEAK_GAIN):
    """Mean gains with the first ``K // 2`` users strong and the rest weak."""
    n_strong = K // 2 if K > 1 else 1
    return np.array([strong] * n_strong + [weak] * (K - n_strong))


def uniform_block(seed, stream, t0, n, width):
    """Uniforms in ``(0, 1]``, shape ``(n, width)``, for slots ``t0 .. t0+n-1``.

    Row ``t`` only depends on ``(seed, stream, t)``.
    """
    words = -(-width // 4)
    bitgen = np.random.Philox(key=[seed % 2**64, stream], counter=t0 * words)
    raw = bitgen.random_raw(n * words * 4).reshape(n, words * 4)[:, :width]
    return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


@dataclass(frozen=True)
class ChannelModel:
    """Fading model.

    Attributes
    ----------
    kind : str
        ``"deterministic"`` (gains equal ``beta`` every slot) or
        ``"iid_exponential"`` (independent exponential gains with means
        ``beta``).
    beta : tuple of float
        Mean gain per user.
    seed : int
    """

    kind: str
    beta: tuple
    seed: int = 0
    _beta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in (DETERMINISTIC, IID_EXPONENTIAL):
            raise ConfigError(f"unknown channel kind {self.kind!r}")
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size == 0:
            raise ConfigError("beta must be a nonempty vector")
        if not np.all(np.isfinite(beta)) or np.any(beta <= 0):
            raise ConfigError("mean gains must be positive and finite")
        object.__setattr__(self, "beta", tuple(float(b) for b in beta))
        object.__setattr__(self, "_beta", beta)

    @property
    def K(self):
        return len(self.beta)

    def sample(self, t):
        """Gains of slot ``t``."""
        return self.sample_block(t, 1)[0]

    def sample_block(self, t0, n):
        """Gains of slots ``t0 .. t0+n-1``, shape ``(n, K)``."""
        if t0 < 0:
            raise ConfigError(f"slot index must be nonnegative, got {t0}")
        if self.kind == DETERMINISTIC:
            return np.broadcast_to(self._beta, (n, self.K)).copy()
        u = uniform_block(self.seed, CHANNEL_STREAM, t0, n, self.K)
        return -self._beta * np.log(u)


def sample(model, t):
    return model.sample(t)
