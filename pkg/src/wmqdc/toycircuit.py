"""Three-register toy scheme: system qubit, ancilla qubit and a pointer mode.

The pointer is weakly coupled to the system through a sigma_z-conditioned
displacement, after which a quantum beam splitter (a Hadamard on the system
controlled by the ancilla) puts the interferometer in a superposition of
closed and open. Post-selecting the system and ancilla leaves the pointer in
a superposition of particle and wave contributions.

Tensor index order is ``[system, ancilla, fock]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidityWarning
from .fockspace import (
    NORM_TOL,
    ConditionalResult,
    FockVector,
    auto_cutoff,
    displacement_matrix,
)

ETA_WARN = 0.1
EXPANSION_WINDOW = 0.05
MODES = ("sequential", "entangled")

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)


@dataclass(frozen=True)
class ToyParams:
    """Integrated coupling ``eta`` and ancilla angle ``alpha`` (radians)."""

    eta: float
    alpha: float

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not 0 <= self.alpha <= np.pi / 2 + 1e-15:
            raise ValueError(f"alpha must lie in [0, pi/2], got {self.alpha}")
        if self.eta > ETA_WARN:
            warnings.warn(f"eta={self.eta} is not a weak coupling", ValidityWarning, stacklevel=2)

    @property
    def gap(self) -> float:
        """``(pi/2 - alpha) / sqrt(2)``, the particle-branch vacuum weight."""
        return (np.pi / 2 - self.alpha) / np.sqrt(2)

    def default_cutoff(self) -> int:
        return auto_cutoff(self.eta * 1.5)


@dataclass(frozen=True, eq=False)
class JointState:
    tensor: np.ndarray

    def __post_init__(self):
        t = np.array(self.tensor, dtype=complex)
        if t.ndim != 3 or t.shape[:2] != (2, 2):
            raise ValueError(f"joint tensor must have shape (2, 2, N+1), got {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)

    @property
    def cutoff(self) -> int:
        return self.tensor.shape[2] - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def pointer(self, system: int, ancilla: int) -> FockVector:
        return FockVector(self.tensor[system, ancilla])


def prepare_initial(params: ToyParams, cutoff: int | None = None) -> JointState:
    """``|+>_s (cos a |0> + sin a |1>)_anc |0>_m``."""
    if cutoff is None:
        cutoff = params.default_cutoff()
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    anc = np.array([np.cos(params.alpha), np.sin(params.alpha)])
    vac = np.zeros(cutoff + 1)
    vac[0] = 1.0
    return JointState(np.einsum("s,a,n->san", plus, anc, vac))


def weak_interact(state: JointState, eta: float) -> JointState:
    """Displace the pointer by +eta on system |0> and by -eta on system |1>."""
    plus = displacement_matrix(eta, state.cutoff)
    minus = displacement_matrix(-eta, state.cutoff)
    out = np.empty_like(state.tensor)
    out[0] = state.tensor[0] @ plus.T
    out[1] = state.tensor[1] @ minus.T
    result = JointState(out)
    for s in range(2):
        for a in range(2):
            result.pointer(s, a).check_tail()
    return result


def quantum_beam_splitter(state: JointState) -> JointState:
    """Hadamard on the system, applied only in the ancilla |1> branch."""
    out = np.array(state.tensor)
    out[:, 1, :] = np.einsum("ij,jn->in", _HADAMARD, state.tensor[:, 1, :])
    return JointState(out)


def run_pipeline(params: ToyParams, cutoff: int | None = None) -> JointState:
    state = prepare_initial(params, cutoff)
    state = weak_interact(state, params.eta)
    return quantum_beam_splitter(state)


def postselect_toy(state: JointState, mode: str = "sequential") -> ConditionalResult:
    """Condition the pointer on the dark-port system outcome and the ancilla.

    ``sequential`` projects the system onto |1>, then the ancilla onto
    (|0> - |1>)/sqrt(2). ``entangled`` undoes the beam splitter and projects
    onto the normalized entangled state ``|1>_s|0>_anc - |->_s|1>_anc``.
    Both give the same unnormalized pointer state,
    ``[cos a / sqrt2 D(-eta) - sin a / 2 (D(eta) - D(-eta))] |0> / sqrt2``.
    """
    if mode == "sequential":
        anc_minus = np.array([1.0, -1.0]) / np.sqrt(2)
        raw = np.einsum("a,an->n", anc_minus, state.tensor[1])
    elif mode == "entangled":
        # the controlled Hadamard is its own inverse
        before = quantum_beam_splitter(state).tensor
        minus = np.array([1.0, -1.0]) / np.sqrt(2)
        target = np.zeros((2, 2))
        target[1, 0] = 1.0
        target[:, 1] = -minus
        target /= np.linalg.norm(target)
        raw = np.einsum("sa,san->n", target.conj(), before)
    else:
        raise ValueError(f"unknown post-selection mode {mode!r}; expected one of {MODES}")
    return ConditionalResult.from_projection(FockVector(raw))


def postselect(params: ToyParams, cutoff: int | None = None, mode: str = "sequential") -> ConditionalResult:
    state = run_pipeline(params, cutoff)
    if abs(state.norm() - 1) > NORM_TOL:
        raise ArithmeticError(f"pipeline lost unitarity: norm {state.norm()}")
    return postselect_toy(state, mode)


def expansion_state_toy(params: ToyParams, cutoff: int | None = None) -> FockVector:
    """Two-level approximation ``(pi/2 - a)/sqrt2 |0> - eta |1>`` near a = pi/2."""
    if params.eta > EXPANSION_WINDOW or np.pi / 2 - params.alpha > EXPANSION_WINDOW:
        warnings.warn("parameters outside the small-quantity expansion window", ValidityWarning, stacklevel=2)
    if cutoff is None:
        cutoff = params.default_cutoff()
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[0] = params.gap
    amps[1] = -params.eta
    return FockVector(amps)


def two_level_mean_q(gap: float, eta: float) -> float:
    """<q>/sigma of ``gap |0> - eta |1>``: ``-2 gap eta / (gap^2 + eta^2)``."""
    den = gap**2 + eta**2
    if den == 0:
        return 0.0
    return -2 * gap * eta / den
