"""
Alpha-fair coded caching over fading broadcast channels.

A slotted simulator of a cache-aided downlink: decentralized coded
caching bookkeeping, a weighted-sum-rate solver for the degraded Gaussian
broadcast channel, the queue network with admission, combination and
scheduling control, two baselines, and a command-line harness.
"""

from .bc_capacity import RateAllocation, ReducedWeights, allocate_power, reduce_weights, solve_wsr, wsr_bruteforce
from .channel import ChannelModel, two_class_gains
from .combinatorics import CacheParams, SubsetTables, codeword_bits, standard_cc_load, subfile_size, subset_tables
from .config import preset
from .engine import RunConfig, RunMetrics, estimate_B, run, sweep
from .errors import ConfigError, ContractViolation, DomainError
from .params import SystemParams
from .policies import ArrivalModel, FairnessConfig, ProposedPolicy
from .queues import DeliveryLedger, QueueState, SlotDecision, apply_slot

__version__ = "0.1.0"

__all__ = [
    "ArrivalModel",
    "CacheParams",
    "ChannelModel",
    "ConfigError",
    "ContractViolation",
    "DeliveryLedger",
    "DomainError",
    "FairnessConfig",
    "ProposedPolicy",
    "QueueState",
    "RateAllocation",
    "ReducedWeights",
    "RunConfig",
    "RunMetrics",
    "SlotDecision",
    "SubsetTables",
    "SystemParams",
    "allocate_power",
    "apply_slot",
    "codeword_bits",
    "estimate_B",
    "preset",
    "reduce_weights",
    "run",
    "solve_wsr",
    "standard_cc_load",
    "subfile_size",
    "subset_tables",
    "sweep",
    "two_class_gains",
    "wsr_bruteforce",
]
