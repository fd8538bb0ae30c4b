from dataclasses import dataclass

from .combinatorics import CacheParams, subset_tables
from .errors import ConfigError


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one system.

    Attributes
    ----------
    K : int
        Number of users.
    m : float
        Normalized cache size (fraction of every file cached per user).
    F : float
        File size in bits.
    T_slot : float
        Channel uses per slot.
    P : float
        Transmit power budget, linear scale.
    """

    K: int
    m: float = 0.6
    F: float = 1000.0
    T_slot: float = 100.0
    P: float = 10.0

    def __post_init__(self):
        CacheParams(self.K, self.m, self.F)
        if self.T_slot <= 0:
            raise ConfigError(f"T_slot must be positive, got {self.T_slot}")
        if self.P < 0:
            raise ConfigError(f"P must be nonnegative, got {self.P}")

    @property
    def cache(self):
        return CacheParams(self.K, self.m, self.F)

    @property
    def bits_per_file(self):
        """Bits a user needs to recover one file (the uncached part)."""
        return (1.0 - self.m) * self.F

    def tables(self):
        return subset_tables(self.K, self.m, self.F)
