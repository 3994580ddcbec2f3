"""Polar-code based one-step reconciliation for QKD post-processing."""

from pcep.channel_math import (
    QBER_THRESHOLD,
    CapacitySummary,
    ChannelSpec,
    DomainError,
    binary_entropy,
    capacity_summary,
    inverse_binary_entropy,
    wiretap_crossover,
)
from pcep.codec import FrozenSpec, SingularSystemError, polar_encode, sc_decode, systematic_encode
from pcep.construction import (
    ReliabilityVector,
    SymmetricDiscreteChannel,
    exact_subchannel_error,
    polarize_channel,
    polarize_reliabilities,
)
from pcep.protocol import (
    Alice,
    Bob,
    DigestMismatchError,
    Eve,
    PublicMessage,
    QBERAbortError,
    ReconciliationResult,
    alice_prepare,
    bob_reconcile,
    estimate_qber,
    eve_attack,
    parameter_estimation,
)
from pcep.sim import ExperimentConfig, SimulationReport, emit_report, run_experiment, run_trial
from pcep.structure import (
    CodeStructure,
    InadmissibleQBERError,
    PartitionTargets,
    build_code_structure,
    select_bad_wiretap,
    select_good_main,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
