"""
Open-system dynamics for ONQ Lab.
Handles coupling-rate formulas, the optical x spin x microwave transduction system, the Lindblad
generator, a fixed-step RK4 integrator and the swap protocol.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
import qutip as qt
from scipy.linalg import expm

from models.system import (
    BosonicMode,
    CollectiveSpinMode,
    CompositeQuantumSystem,
    DensityMatrix,
    Direction,
    ProtocolMode,
    ProtocolSchedule,
    ProtocolStage,
    SimResult,
    TransductionParams,
)
from utils.constants import EPSILON_0, HBAR, MHZ_2PI, MU_0, V_PER_ANGSTROM
from utils.errors import IntegratorRefusalError, InvalidArgumentError, SingularityError

logger = logging.getLogger(__name__)

STEPS_PER_RATE = 50
TRACE_DRIFT_LIMIT = 1e-6
ADIABATIC_RATIO = 10.0


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise InvalidArgumentError(f"{name} must be positive, got {value}")


def zero_point_electric_field(omega: float, eps_r: float, volume: float) -> float:
    """E_zpf = sqrt(hbar w / (eps_r eps0 V)) in V/m."""
    _require_positive(omega=omega, eps_r=eps_r, volume=volume)
    return math.sqrt(HBAR * omega / (eps_r * EPSILON_0 * volume))


def zero_point_magnetic_field(omega_m: float, mu_r: float, volume_m: float) -> float:
    """B_zpf = sqrt(mu0 mu_r hbar w_m / V_m) in tesla."""
    _require_positive(omega_m=omega_m, mu_r=mu_r, volume_m=volume_m)
    return math.sqrt(MU_0 * mu_r * HBAR * omega_m / volume_m)


def collective_field_density(density: float, omega: float, eps_r: float) -> float:
    """sqrt(N) E_zpf for an ensemble filling the mode volume, independent of that volume (V/m)."""
    _require_positive(density=density, omega=omega, eps_r=eps_r)
    return math.sqrt(HBAR * omega * density / (eps_r * EPSILON_0))


def collective_optical_coupling(g_o: complex, N: float, pump_field: float, e_zpf: float) -> float:
    """
    G_o = |g_o| sqrt(N) E_pump E_zpf.

    Args:
        g_o: ONQ coupling in 2pi MHz/(V/A)^2
        N: Number of nuclei
        pump_field: E(-w_o2) in V/A
        e_zpf: Zero-point field in V/m

    Returns:
        G_o in rad/s
    """
    if N < 1:
        raise InvalidArgumentError(f"N must be >= 1, got {N}")
    if pump_field < 0 or e_zpf < 0:
        raise InvalidArgumentError("field amplitudes must be non-negative")
    return abs(g_o) * MHZ_2PI * math.sqrt(N) * pump_field * (e_zpf / V_PER_ANGSTROM)


def collective_mw_coupling(g_m: float, N: float, b_zpf: float) -> float:
    """G_m = g_m sqrt(N) B_zpf in rad/s (g_m in rad s^-1 T^-1)."""
    if N < 1:
        raise InvalidArgumentError(f"N must be >= 1, got {N}")
    return abs(g_m) * math.sqrt(N) * b_zpf


def adiabatic_beam_splitter_coupling(G_o: float, G_m: float, delta: float) -> float:
    """G_om = G_o G_m / delta for spins detuned by delta and eliminated."""
    if delta == 0:
        raise SingularityError("delta = 0: the spins cannot be adiabatically eliminated")
    if abs(delta) < ADIABATIC_RATIO * max(abs(G_o), abs(G_m)):
        logger.warning("adiabatic elimination with |delta| = %.3e < %.0f x max(G_o, G_m) = %.3e",
                       abs(delta), ADIABATIC_RATIO, max(abs(G_o), abs(G_m)))
    return G_o * G_m / delta


def ensemble_emission_rate(G_o: float, kappa_o: float) -> float:
    """R = 4 G_o^2 / kappa_o."""
    if kappa_o == 0:
        raise SingularityError("kappa_o = 0")
    if kappa_o < 0:
        raise InvalidArgumentError("kappa_o must be positive")
    return 4.0 * G_o ** 2 / kappa_o


def cavity_suppression_factor(delta_GE: float, kappa_o: float) -> float:
    """r = kappa_o^2 / (4 Delta_GE^2 + kappa_o^2)."""
    if delta_GE < 0 or kappa_o < 0:
        raise InvalidArgumentError("delta_GE and kappa_o must be non-negative")
    if delta_GE == 0 and kappa_o == 0:
        raise InvalidArgumentError("delta_GE and kappa_o cannot both be zero")
    return kappa_o ** 2 / (4.0 * delta_GE ** 2 + kappa_o ** 2)


def transduction_params_from_modes(optical: BosonicMode, spin: CollectiveSpinMode, mw: BosonicMode,
                                   pump_field: float, **options) -> TransductionParams:
    """
    Derive the coupling rates from cavity and ensemble parameters.

    Args:
        optical: Optical mode with mode_volume and relative_permittivity
        spin: Collective spin mode (N, g_o, g_m, Gamma_n, delta)
        mw: Microwave mode with mode_volume and relative_permeability
        pump_field: Classical pump amplitude in V/A
        options: Forwarded to TransductionParams (truncation, direction, ...)
    """
    if optical.mode_volume is None or mw.mode_volume is None:
        raise InvalidArgumentError("both cavities need a mode_volume to derive couplings")
    e_zpf = zero_point_electric_field(optical.angular_frequency, optical.relative_permittivity,
                                      optical.mode_volume)
    b_zpf = zero_point_magnetic_field(mw.angular_frequency, mw.relative_permeability, mw.mode_volume)
    return TransductionParams(
        G_o=collective_optical_coupling(spin.g_o, spin.ensemble_size_N, pump_field, e_zpf),
        G_m=collective_mw_coupling(spin.g_m, spin.ensemble_size_N, b_zpf),
        kappa_o=optical.kappa,
        kappa_m=mw.kappa,
        gamma_n=spin.relaxation_gamma_n,
        delta=spin.detuning_delta,
        **options,
    )


def _mode_operators(truncation: int) -> Dict[str, np.ndarray]:
    """Ladder and projector operators on optical x spin x mw."""
    n = truncation
    eye_o, eye_s, eye_m = qt.qeye(n), qt.qeye(2), qt.qeye(n)
    a = qt.tensor(qt.destroy(n), eye_s, eye_m)
    sm = qt.tensor(eye_o, qt.destroy(2), eye_m)      # |g><e| with |g> = basis 0
    b = qt.tensor(eye_o, eye_s, qt.destroy(n))
    one = qt.fock_dm(n, 1)
    return {
        "a": a.full(),
        "sm": sm.full(),
        "b": b.full(),
        "sz": (2 * sm.dag() * sm - qt.tensor(eye_o, eye_s, eye_m)).full(),
        "n_optical": (a.dag() * a).full(),
        "n_spin": (sm.dag() * sm).full(),
        "n_mw": (b.dag() * b).full(),
        "p1_optical": qt.tensor(one, eye_s, eye_m).full(),
        "p1_mw": qt.tensor(eye_o, eye_s, one).full(),
    }


def build_transduction_system(params: TransductionParams, optical_on: bool = True,
                              mw_on: bool = True, delta: Optional[float] = None) -> CompositeQuantumSystem:
    """
    H = delta/2 sz + G_o (a^dag s- + h.c.) [optical gate] + G_m (b^dag s- + h.c.) [mw gate]

    with dissipators (a, kappa_o), (b, kappa_m), (s-, Gamma_n).

    Args:
        params: Rates in rad/s and the Fock truncation
        optical_on: Gate for the optical coupling
        mw_on: Gate for the microwave coupling
        delta: Spin detuning; params.delta when None
    """
    if not (np.isfinite(params.G_o) and np.isfinite(params.G_m)):
        raise InvalidArgumentError("couplings must be finite")
    ops = _mode_operators(params.truncation)
    delta = params.delta if delta is None else delta
    a, sm, b = ops["a"], ops["sm"], ops["b"]
    h = 0.5 * delta * ops["sz"]
    if optical_on:
        h = h + params.G_o * (a.conj().T @ sm + sm.conj().T @ a)
    if mw_on:
        h = h + params.G_m * (b.conj().T @ sm + sm.conj().T @ b)
    return CompositeQuantumSystem(
        dims=(params.truncation, 2, params.truncation),
        hamiltonian=h,
        dissipators=[(a, params.kappa_o), (b, params.kappa_m), (sm, params.gamma_n)],
        observables={
            "optical": ops["n_optical"],
            "spin": ops["n_spin"],
            "mw": ops["n_mw"],
            "p1_optical": ops["p1_optical"],
            "p1_mw": ops["p1_mw"],
        },
    )


def basis_state(truncation: int, n_optical: int, spin_excited: bool, n_mw: int) -> np.ndarray:
    """Product ket |n_optical, g/e, n_mw>."""
    return qt.tensor(qt.basis(truncation, n_optical), qt.basis(2, int(spin_excited)),
                     qt.basis(truncation, n_mw)).full().reshape(-1)


class LindbladGenerator:
    """Precomputed form of -i[H, rho] + sum_k g_k (L rho L^dag - {L^dag L, rho}/2)."""

    def __init__(self, system: CompositeQuantumSystem):
        self.dimension = system.dimension
        damping = np.zeros_like(system.hamiltonian)
        self.jumps = []
        for op, rate in system.dissipators:
            if rate == 0:
                continue
            damping = damping + rate * (op.conj().T @ op)
            self.jumps.append((math.sqrt(rate) * op, math.sqrt(rate) * op.conj().T))
        self.h_eff = system.hamiltonian - 0.5j * damping
        self.h_eff_dag = self.h_eff.conj().T

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.h_eff @ rho - rho @ self.h_eff_dag)
        for jump, jump_dag in self.jumps:
            out += jump @ rho @ jump_dag
        return out


def _as_matrix(rho, dimension: int) -> np.ndarray:
    matrix = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if matrix.shape != (dimension, dimension):
        raise InvalidArgumentError(f"state shape {matrix.shape} does not match system dimension {dimension}")
    return matrix


def lindblad_rhs(system: CompositeQuantumSystem, rho) -> np.ndarray:
    """
    d rho/dt for the system's Hamiltonian and dissipators.

    Args:
        system: Composite system
        rho: DensityMatrix or square array on the same space
    """
    return LindbladGenerator(system)(_as_matrix(rho, system.dimension))


def stability_bound(system: CompositeQuantumSystem) -> float:
    """Largest accepted step, 1/(50 max(|H_ij|, rates)); inf for a frozen system."""
    rate = system.max_rate()
    return math.inf if rate == 0 else 1.0 / (STEPS_PER_RATE * rate)


def _expectation(operator: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.sum(operator * rho.T)))


def evolve(system: CompositeQuantumSystem, rho0, duration: float, dt: Optional[float] = None,
           record_stride: int = 1, target: Optional[str] = None,
           observables: Optional[Dict[str, np.ndarray]] = None, t0: float = 0.0) -> SimResult:
    """
    Integrate the master equation with fixed-step RK4.

    Args:
        system: Composite system
        rho0: Initial DensityMatrix
        duration: Seconds to integrate
        dt: Requested step; must not exceed the stability bound (default: the bound)
        record_stride: Record every k-th step (the last step is always recorded)
        target: "optical" or "mw"; its single-photon population is the running fidelity
        observables: Extra operators to record next to the mode populations
        t0: Time stamp of rho0

    Returns:
        SimResult whose final_state is the state at t0 + duration
    """
    if duration < 0:
        raise InvalidArgumentError(f"duration must be non-negative, got {duration}")
    if record_stride < 1:
        raise InvalidArgumentError("record_stride must be >= 1")
    rho = _as_matrix(rho0, system.dimension).copy()
    bound = stability_bound(system)
    if dt is not None:
        if not dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {dt}")
        if dt > bound * (1.0 + 1e-12):
            raise IntegratorRefusalError(dt, bound)
        steps = math.ceil(duration / dt - 1e-9)
    else:
        steps = 1 if math.isinf(bound) else math.ceil(duration / bound - 1e-9)
    steps = max(steps, 1) if duration > 0 else 0
    h = duration / steps if steps else 0.0

    recorded = dict(system.observables)
    recorded.update(observables or {})
    projector = recorded.get(f"p1_{target}") if target else None
    generator = LindbladGenerator(system)

    times: List[float] = []
    series: Dict[str, List[float]] = {name: [] for name in recorded}
    traces: List[float] = []
    running: List[float] = []

    def record(step: int):
        times.append(t0 + step * h)
        for name, operator in recorded.items():
            series[name].append(_expectation(operator, rho))
        traces.append(float(np.real(np.trace(rho))))
        running.append(_expectation(projector, rho) if projector is not None else 0.0)

    record(0)
    for step in range(1, steps + 1):
        k1 = generator(rho)
        k2 = generator(rho + 0.5 * h * k1)
        k3 = generator(rho + 0.5 * h * k2)
        k4 = generator(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % record_stride == 0 or step == steps:
            record(step)

    traces_array = np.asarray(traces)
    drift = float(np.max(np.abs(traces_array - 1.0)))
    if drift > TRACE_DRIFT_LIMIT:
        logger.warning("trace drifted by %.3e during integration", drift)
    fidelity = float(np.clip(running[-1], 0.0, 1.0))
    return SimResult(
        times=np.asarray(times),
        populations={name: np.asarray(values) for name, values in series.items()},
        trace_series=traces_array,
        fidelity_running=np.asarray(running),
        fidelity=fidelity,
        final_state=rho,
        stage_durations=(duration,),
        target_mode=target or "",
    )


def default_schedule(params: TransductionParams) -> ProtocolSchedule:
    """
    Stages for the configured direction and mode.

    Swap stages last pi/(2G) each; the adiabatic stage lasts pi/(2 G_om).
    User stage_durations replace the defaults one for one.
    """
    if params.mode is ProtocolMode.ADIABATIC:
        gates = [(True, True)]
    elif params.direction is Direction.OPTICAL_TO_MW:
        gates = [(True, False), (False, True)]
    else:
        gates = [(False, True), (True, False)]

    if params.stage_durations is not None:
        if len(params.stage_durations) not in (0, len(gates)):
            raise InvalidArgumentError(
                f"{params.mode.value} protocol takes {len(gates)} stage durations, "
                f"got {len(params.stage_durations)}"
            )
        durations = params.stage_durations
        gates = gates[:len(durations)]
    else:
        durations = []
        for optical_on, mw_on in gates:
            if optical_on and mw_on:
                coupling = abs(adiabatic_beam_splitter_coupling(params.G_o, params.G_m, params.delta))
            else:
                coupling = abs(params.G_o if optical_on else params.G_m)
            if coupling == 0:
                raise InvalidArgumentError("zero coupling in an active stage")
            durations.append(math.pi / (2.0 * coupling))
    return ProtocolSchedule(tuple(ProtocolStage(t, o, m) for t, (o, m) in zip(durations, gates)))


def run_swap_protocol(params: TransductionParams,
                      schedule: Optional[ProtocolSchedule] = None) -> SimResult:
    """
    Carry one excitation between the cavities through the spin ensemble.

    Args:
        params: Rates, truncation, direction and mode
        schedule: Stages to run; default_schedule(params) when None

    Returns:
        SimResult over the whole protocol; fidelity is the target cavity's single-photon population
    """
    schedule = default_schedule(params) if schedule is None else schedule
    n = params.truncation
    if params.direction is Direction.OPTICAL_TO_MW:
        initial = basis_state(n, 1, False, 0)
        target_ket = basis_state(n, 0, False, 1)
        target = "mw"
    else:
        initial = basis_state(n, 0, False, 1)
        target_ket = basis_state(n, 1, False, 0)
        target = "optical"
    rho = DensityMatrix.from_ket(initial).rho

    if len(schedule) == 0:
        logger.warning("protocol has no stages; fidelity is 0")
        system = build_transduction_system(params, False, False)
        return evolve(system, rho, 0.0, target=target)

    segments: List[SimResult] = []
    t = 0.0
    for stage in schedule.stages:
        if (stage.optical_coupling_on and params.G_o == 0) or (stage.mw_coupling_on and params.G_m == 0):
            raise InvalidArgumentError("zero coupling in an active stage")
        delta = params.delta if params.mode is ProtocolMode.ADIABATIC else 0.0
        system = build_transduction_system(params, stage.optical_coupling_on, stage.mw_coupling_on, delta)
        segment = evolve(system, rho, stage.duration, dt=params.dt, record_stride=params.record_stride,
                         target=target, t0=t)
        segments.append(segment)
        rho = segment.final_state
        t += stage.duration

    def joined(values):
        parts = [values(segments[0])] + [values(s)[1:] for s in segments[1:]]
        return np.concatenate(parts)

    state_fidelity = float(np.real(target_ket.conj() @ rho @ target_ket))
    last = segments[-1]
    logger.info("swap protocol finished: fidelity %.6f over %d stages", last.fidelity, len(segments))
    return SimResult(
        times=joined(lambda s: s.times),
        populations={name: joined(lambda s, k=name: s.populations[k]) for name in last.populations},
        trace_series=joined(lambda s: s.trace_series),
        fidelity_running=joined(lambda s: s.fidelity_running),
        fidelity=last.fidelity,
        state_fidelity=float(np.clip(state_fidelity, 0.0, 1.0)),
        final_state=rho,
        stage_durations=tuple(stage.duration for stage in schedule.stages),
        target_mode=target,
    )


def truncation_sensitivity(params: TransductionParams, result: Optional[SimResult] = None,
                           factor: int = 2) -> Tuple[float, SimResult]:
    """
    Rerun with the Fock truncation multiplied by factor.

    Returns:
        (|fidelity change|, the rerun result)
    """
    result = run_swap_protocol(params) if result is None else result
    finer = run_swap_protocol(params.with_changes(truncation=params.truncation * factor, dt=None))
    return abs(finer.fidelity - result.fidelity), finer


def single_excitation_propagator(G_o: float, G_m: float, delta: float, t: float) -> np.ndarray:
    """
    Closed-system propagator on (|1,g,0>, |0,e,0>, |0,g,1>).

    Returns:
        3x3 unitary exp(-i H t)
    """
    h = np.array([
        [-0.5 * delta, G_o, 0.0],
        [G_o, 0.5 * delta, G_m],
        [0.0, G_m, -0.5 * delta],
    ], dtype=complex)
    return expm(-1j * h * t)
