"""
Transduction system models for ONQ Lab.
Represents cavity modes, the collective nuclear-spin mode, the composite open system, its state
and the swap-protocol schedule and results.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import InvalidArgumentError

HERMITIAN_TOLERANCE = 1e-12
STATE_HERMITIAN_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-8
POSITIVITY_TOLERANCE = 1e-8


class Direction(Enum):
    """Which way the excitation is carried."""
    OPTICAL_TO_MW = "optical_to_mw"
    MW_TO_OPTICAL = "mw_to_optical"


class ProtocolMode(Enum):
    """Sequential swaps through the spins, or one adiabatic beam-splitter stage."""
    SWAP = "swap"
    ADIABATIC = "adiabatic"


@dataclass(frozen=True)
class BosonicMode:
    """A truncated cavity mode.

    angular_frequency and kappa in rad/s, mode_volume in m^3.
    """

    name: str
    angular_frequency: float
    truncation_dim: int = 3
    kappa: float = 0.0
    quality_factor: Optional[float] = None
    mode_volume: Optional[float] = None
    relative_permittivity: float = 1.0
    relative_permeability: float = 1.0

    def __post_init__(self):
        if self.truncation_dim < 2:
            raise InvalidArgumentError(f"{self.name}: truncation_dim must be >= 2")
        if self.quality_factor is not None:
            if self.quality_factor <= 0:
                raise InvalidArgumentError(f"{self.name}: quality_factor must be positive")
            object.__setattr__(self, "kappa", self.angular_frequency / self.quality_factor)
        if self.kappa < 0:
            raise InvalidArgumentError(f"{self.name}: kappa must be non-negative")
        if self.mode_volume is not None and self.mode_volume <= 0:
            raise InvalidArgumentError(f"{self.name}: mode_volume must be positive")


@dataclass(frozen=True)
class CollectiveSpinMode:
    """The nuclear-spin ensemble as one effective two-level system.

    detuning and relaxation in rad/s; g_o in 2pi MHz/(V/A)^2; g_m in rad s^-1 T^-1.
    """

    detuning_delta: float = 0.0
    relaxation_gamma_n: float = 0.0
    ensemble_size_N: float = 1.0
    g_o: complex = 0.0
    g_m: float = 0.0

    def __post_init__(self):
        if self.ensemble_size_N < 1:
            raise InvalidArgumentError("ensemble_size_N must be >= 1")
        if self.relaxation_gamma_n < 0:
            raise InvalidArgumentError("relaxation_gamma_n must be non-negative")


@dataclass(frozen=True)
class TransductionParams:
    """Everything a transduction run needs, in rad/s and seconds."""

    G_o: float
    G_m: float
    kappa_o: float = 0.0
    kappa_m: float = 0.0
    gamma_n: float = 0.0
    delta: float = 0.0
    truncation: int = 3
    direction: Direction = Direction.OPTICAL_TO_MW
    mode: ProtocolMode = ProtocolMode.SWAP
    stage_durations: Optional[Tuple[float, ...]] = None
    dt: Optional[float] = None
    record_stride: int = 1

    def __post_init__(self):
        for name in ("kappa_o", "kappa_m", "gamma_n"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative")
        if self.truncation < 2:
            raise InvalidArgumentError("truncation must be >= 2")
        if self.record_stride < 1:
            raise InvalidArgumentError("record_stride must be >= 1")
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "mode", ProtocolMode(self.mode))
        if self.stage_durations is not None:
            object.__setattr__(self, "stage_durations", tuple(float(t) for t in self.stage_durations))

    def with_changes(self, **changes) -> "TransductionParams":
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        two_pi = 2 * np.pi
        return {
            "G_o_Hz": self.G_o / two_pi,
            "G_m_Hz": self.G_m / two_pi,
            "kappa_o_Hz": self.kappa_o / two_pi,
            "kappa_m_Hz": self.kappa_m / two_pi,
            "gamma_n_Hz": self.gamma_n / two_pi,
            "delta_Hz": self.delta / two_pi,
            "truncation": self.truncation,
            "direction": self.direction.value,
            "mode": self.mode.value,
        }


@dataclass(frozen=True, eq=False)
class CompositeQuantumSystem:
    """Optical mode x collective spin x microwave mode with Lindblad channels.

    hamiltonian in rad/s; dissipators are (jump operator, rate in rad/s) pairs;
    observables holds the number operators recorded during evolution.
    """

    dims: Tuple[int, int, int]
    hamiltonian: np.ndarray
    dissipators: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    observables: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        total = int(np.prod(self.dims))
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.shape != (total, total):
            raise InvalidArgumentError(f"Hamiltonian shape {h.shape} does not match dims {self.dims}")
        scale = max(1.0, float(np.max(np.abs(h))))
        if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOLERANCE * scale:
            raise InvalidArgumentError("Hamiltonian is not Hermitian")
        for op, rate in self.dissipators:
            if rate < 0:
                raise InvalidArgumentError("dissipator rates must be non-negative")
            if op.shape != (total, total):
                raise InvalidArgumentError("dissipator dimension does not match the system")
        object.__setattr__(self, "hamiltonian", h)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims))

    def max_rate(self) -> float:
        """Largest |H_ij| or dissipator rate, rad/s."""
        rates = [rate for _, rate in self.dissipators]
        return max([float(np.max(np.abs(self.hamiltonian)))] + rates)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix on the composite space."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidArgumentError(f"density matrix must be square, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_HERMITIAN_TOLERANCE:
            raise InvalidArgumentError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > TRACE_TOLERANCE:
            raise InvalidArgumentError(f"density matrix trace is {np.trace(rho).real:.10f}")
        if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -POSITIVITY_TOLERANCE:
            raise InvalidArgumentError("density matrix has negative eigenvalues")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, ket: np.ndarray) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex).reshape(-1)
        return cls(np.outer(ket, ket.conj()))

    @property
    def dimension(self) -> int:
        return self.rho.shape[0]


@dataclass(frozen=True)
class ProtocolStage:
    """One stage: a duration in seconds and which couplings are switched on."""

    duration: float
    optical_coupling_on: bool
    mw_coupling_on: bool

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError(f"stage duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class ProtocolSchedule:
    stages: Tuple[ProtocolStage, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def total_duration(self) -> float:
        return sum(stage.duration for stage in self.stages)

    def __len__(self) -> int:
        return len(self.stages)


@dataclass(frozen=True, eq=False)
class SimResult:
    """Time series of one run.

    populations maps "optical", "spin", "mw" to <a^dag a>, <sigma+ sigma->, <b^dag b>;
    fidelity_running is the target-mode single-excitation population at each recorded time.
    """

    times: np.ndarray
    populations: Dict[str, np.ndarray]
    trace_series: np.ndarray
    fidelity_running: np.ndarray
    fidelity: float
    state_fidelity: float = 0.0
    final_state: Optional[np.ndarray] = None
    stage_durations: Tuple[float, ...] = ()
    target_mode: str = "mw"

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0:
            raise InvalidArgumentError(f"fidelity {self.fidelity} outside [0, 1]")

    @property
    def max_trace_drift(self) -> float:
        if len(self.trace_series) == 0:
            return 0.0
        return float(np.max(np.abs(self.trace_series - 1.0)))

    def rows(self) -> List[Sequence[float]]:
        """Trajectory rows (t, optical, spin, mw, trace, fidelity_running)."""
        return [
            (float(t), float(po), float(ps), float(pm), float(tr), float(fr))
            for t, po, ps, pm, tr, fr in zip(
                self.times, self.populations["optical"], self.populations["spin"],
                self.populations["mw"], self.trace_series, self.fidelity_running,
            )
        ]
