"""Brute-force state-vector simulation of the optomechanical protocol.

The joint state is a tensor ``[photon_mode, ancilla_pol, mirror_fock]``.
The photon-mode basis changes from stage to stage:

    input      (in,H) (in,V) (in',H) (in',V)
    arms       (A,H)  (A,V)  (B,H)   (B,V)
    PDBS out   (C,H)  (C,V)  (D,H)   (D,V)
    erased     a'     a''    b'      b''

and each optical element is a 4x4 unitary between consecutive bases. The
mirror evolves under ``c^dag c - k (c + c^dag)`` while the photon sits in
arm A and under ``c^dag c`` otherwise (units hbar = omega_m = 1); the optical
frequency is common to both arms and dropped as a global phase. Nothing from
the analytic Kerr solution is used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import optomech
from .errors import DegeneratePostselectionError
from .fockspace import (
    DEGENERATE_NORM,
    ConditionalResult,
    FockVector,
    annihilation,
)
from .optomech import OptoParams

INPUT_MODES = ("in,H", "in,V", "in',H", "in',V")
ARM_MODES = ("A,H", "A,V", "B,H", "B,V")
PDBS_MODES = ("C,H", "C,V", "D,H", "D,V")
OUTPUT_MODES = ("a'", "a''", "b'", "b''")
ANCILLA = ("H", "V")
DARK_PORT = "a'"

CROSSCHECK_TOL = 1e-8

_R = 1 / np.sqrt(2)

# columns index the input basis, rows the output basis
FIRST_BEAM_SPLITTER = np.array(
    [
        [_R, 0, _R, 0],
        [0, _R, 0, _R],
        [_R, 0, -_R, 0],
        [0, _R, 0, -_R],
    ]
)
# H: total reflection A->C, B->D.  V: A -> (-C + D)/sqrt2, B -> (C + D)/sqrt2.
PDBS = np.array(
    [
        [1, 0, 0, 0],
        [0, -_R, 0, _R],
        [0, 0, 1, 0],
        [0, _R, 0, _R],
    ]
)
# 45-degree PBS pairs: H -> (x' + x'')/sqrt2, V -> (-x' + x'')/sqrt2 for x in {a, b}
ERASURE = np.array(
    [
        [_R, -_R, 0, 0],
        [_R, _R, 0, 0],
        [0, 0, _R, -_R],
        [0, 0, _R, _R],
    ]
)


def eom_rotation(alpha: float) -> np.ndarray:
    """Ancilla polarization rotation: H -> cos H + sin V, V -> -sin H + cos V."""
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    matrix: np.ndarray
    k: float
    photon_in_A: bool

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1


def hamiltonian(k: float, cutoff: int, photon_in_A: bool) -> HamiltonianMatrix:
    c = annihilation(cutoff).matrix
    mat = c.T @ c
    if photon_in_A:
        mat = mat - k * (c + c.T)
    return HamiltonianMatrix(mat, float(k), bool(photon_in_A))


@lru_cache(maxsize=256)
def _eigensystem(k: float, cutoff: int, photon_in_A: bool):
    evals, evecs = np.linalg.eigh(hamiltonian(k, cutoff, photon_in_A).matrix)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return evals, evecs


def propagator(k: float, cutoff: int, photon_in_A: bool, tau: float) -> np.ndarray:
    """``exp(-i H tau)`` through the Hermitian eigendecomposition of H."""
    evals, evecs = _eigensystem(float(k), int(cutoff), bool(photon_in_A))
    return (evecs * np.exp(-1j * evals * tau)) @ evecs.conj().T


def evolve_optomech(mirror: FockVector, photon_in_A: bool, tau: float, k: float) -> FockVector:
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    out = FockVector(propagator(k, mirror.cutoff, photon_in_A, tau) @ mirror.amplitudes)
    return out.check_tail()


@dataclass(frozen=True, eq=False)
class ProtocolState:
    tensor: np.ndarray
    modes: tuple = field(default=INPUT_MODES)

    @property
    def cutoff(self) -> int:
        return self.tensor.shape[2] - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def component(self, mode: str, ancilla: str) -> FockVector:
        return FockVector(self.tensor[self.modes.index(mode), ANCILLA.index(ancilla)])


def bell_input(cutoff: int) -> ProtocolState:
    """(|H>_anc |H>_s + |V>_anc |V>_s)/sqrt2, signal in port ``in``, mirror in |0>."""
    t = np.zeros((4, 2, cutoff + 1), dtype=complex)
    t[0, 0, 0] = _R
    t[1, 1, 0] = _R
    return ProtocolState(t, INPUT_MODES)


def _optical(state: ProtocolState, unitary: np.ndarray, before: tuple, after: tuple) -> ProtocolState:
    if state.modes != before:
        raise ValueError(f"element expects modes {before}, state is in {state.modes}")
    return ProtocolState(np.einsum("ij,jan->ian", unitary, state.tensor), after)


def first_beam_splitter(state: ProtocolState) -> ProtocolState:
    return _optical(state, FIRST_BEAM_SPLITTER, INPUT_MODES, ARM_MODES)


def optomechanical_interaction(state: ProtocolState, k: float, tau: float) -> ProtocolState:
    if state.modes != ARM_MODES:
        raise ValueError("the optomechanical stage acts on the arm modes")
    u_a = propagator(k, state.cutoff, True, tau)
    u_b = propagator(k, state.cutoff, False, tau)
    t = np.empty_like(state.tensor)
    for m, label in enumerate(ARM_MODES):
        u = u_a if label.startswith("A") else u_b
        t[m] = state.tensor[m] @ u.T
    out = ProtocolState(t, ARM_MODES)
    for m in range(4):
        for a in range(2):
            FockVector(t[m, a]).check_tail()
    return out


def pdbs(state: ProtocolState) -> ProtocolState:
    return _optical(state, PDBS, ARM_MODES, PDBS_MODES)


def erasure(state: ProtocolState) -> ProtocolState:
    return _optical(state, ERASURE, PDBS_MODES, OUTPUT_MODES)


def rotate_ancilla(state: ProtocolState, alpha: float) -> ProtocolState:
    return ProtocolState(np.einsum("ab,mbn->man", eom_rotation(alpha), state.tensor), state.modes)


def simulate(params: OptoParams, tau: float, stages: bool = False):
    """Run every unitary stage; return the final state (or all stages)."""
    history = [bell_input(params.fock_cutoff)]
    history.append(first_beam_splitter(history[-1]))
    history.append(optomechanical_interaction(history[-1], params.k, tau))
    history.append(pdbs(history[-1]))
    history.append(erasure(history[-1]))
    history.append(rotate_ancilla(history[-1], params.alpha))
    return history if stages else history[-1]


def outcome_probabilities(params: OptoParams, tau: float) -> dict:
    """Probability of every (photon detector, ancilla detector) outcome."""
    final = simulate(params, tau)
    weights = np.sum(np.abs(final.tensor) ** 2, axis=2)
    return {(m, a): float(weights[i, j]) for i, m in enumerate(OUTPUT_MODES) for j, a in enumerate(ANCILLA)}


def run_protocol(params: OptoParams, tau: float) -> ConditionalResult:
    """Conditional mirror state for the D_H ancilla click and the dark-port photon."""
    raw = simulate(params, tau).component(DARK_PORT, "H")
    return ConditionalResult.from_projection(raw)


# -- crosscheck -----------------------------------------------------------------

DEFAULT_K = (0.001, 0.005, 0.01, 0.1)
DEFAULT_ALPHA_FRACS = (0.0, 0.5, 0.9, 0.996, 0.9995, 1.0)


def default_taus(steps: int = 200, stop: float = 4 * np.pi) -> np.ndarray:
    return np.linspace(0.0, stop, steps)


@dataclass
class Divergence:
    name: str
    quantity: str
    literal_vs_reference: float
    derived_vs_reference: float
    reference: str

    @property
    def printed_matches(self) -> bool:
        return bool(self.literal_vs_reference < CROSSCHECK_TOL)


@dataclass
class CrosscheckReport:
    max_dev: dict
    n_points: int
    n_degenerate: int
    flagged: list
    divergences: list

    @property
    def max_deviation(self) -> float:
        return max(self.max_dev.values()) if self.max_dev else 0.0

    @property
    def passed(self) -> bool:
        return bool(self.n_points > 0 and self.max_deviation < CROSSCHECK_TOL)

    def format(self) -> str:
        lines = [
            f"points compared: {self.n_points} (degenerate skipped: {self.n_degenerate})",
            *(f"max |closed - oracle| {q:<12s} {v:.3e}" for q, v in self.max_dev.items()),
            f"flagged points (> {CROSSCHECK_TOL:.0e}): {len(self.flagged)}",
            f"status: {'PASS' if self.passed else 'FAIL'}",
        ]
        if self.divergences:
            lines.append("")
            lines.append(
                f"{'formula':<26s}{'quantity':<14s}{'printed-vs-ref':>16s}{'derived-vs-ref':>16s}  verdict  (reference)"
            )
            for d in self.divergences:
                verdict = "matches " if d.printed_matches else "DIVERGES"
                lines.append(
                    f"{d.name:<26s}{d.quantity:<14s}{d.literal_vs_reference:16.3e}"
                    f"{d.derived_vs_reference:16.3e}  {verdict} ({d.reference})"
                )
        return "\n".join(lines)


def _nanmax_abs(a, b) -> float:
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    diff = np.where(np.isnan(diff), np.inf, diff)
    return float(np.max(diff)) if diff.size else 0.0


def crosscheck(
    k_values=DEFAULT_K,
    alpha_fracs=DEFAULT_ALPHA_FRACS,
    taus=None,
    cutoff: int | None = None,
    literal: bool = True,
) -> CrosscheckReport:
    """Compare the derived closed forms with the oracle over a parameter grid.

    With ``literal`` the report also tabulates how far the printed formulas
    stray from the oracle (or, for the expansions, from the derived forms).
    """
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    max_dev = {"q": 0.0, "p": 0.0, "prob": 0.0}
    flagged = []
    n_points = n_degenerate = 0
    rows = {"q": [], "p": [], "prob": []}
    for k in k_values:
        for frac in alpha_fracs:
            params = OptoParams.from_fraction(k, frac, cutoff=cutoff)
            q_cf = optomech.closed_mean_q(k, params.alpha, taus)
            p_cf = optomech.closed_mean_p(k, params.alpha, taus)
            pr_cf = optomech.closed_success_probability(k, params.alpha, taus)
            for i, tau in enumerate(taus):
                try:
                    res = run_protocol(params, float(tau))
                except DegeneratePostselectionError:
                    n_degenerate += 1
                    continue
                n_points += 1
                got = {"q": res.mean_q(), "p": res.mean_p(), "prob": res.probability}
                want = {"q": q_cf[i], "p": p_cf[i], "prob": pr_cf[i]}
                for key in got:
                    dev = abs(got[key] - want[key])
                    if np.isnan(dev):
                        dev = np.inf
                    max_dev[key] = max(max_dev[key], dev)
                    if dev >= CROSSCHECK_TOL:
                        flagged.append((k, frac, float(tau), key, float(dev)))
                    rows[key].append((k, params.alpha, float(tau), got[key]))
    divergences = _divergence_table(rows, k_values) if literal and n_points else []
    return CrosscheckReport(max_dev, n_points, n_degenerate, flagged, divergences)


def _divergence_table(rows: dict, k_values) -> list:
    table = []
    specs = [
        ("position <q>", "q", optomech.literal_mean_q, optomech.closed_mean_q, 1.0),
        ("momentum <p>", "p", optomech.literal_mean_p, optomech.closed_mean_p, 1.0),
        (
            "release probability",
            "prob",
            optomech.literal_success_probability,
            optomech.closed_success_probability,
            optomech.PRINTED_PROBABILITY_SCALE,
        ),
    ]
    for name, key, printed, derived, scale in specs:
        k, alpha, tau, ref = (np.array(c) for c in zip(*rows[key]))
        ref = scale * ref
        lit = np.array([printed(kk, aa, tt) for kk, aa, tt in zip(k, alpha, tau)])
        der = np.array([scale * derived(kk, aa, tt) for kk, aa, tt in zip(k, alpha, tau)])
        table.append(Divergence(name, key, _nanmax_abs(lit, ref), _nanmax_abs(der, ref), "oracle"))

    # expansions: printed two-level forms against the derived two-level forms
    ks = [k for k in k_values if k <= optomech.EXPANSION_K] or [optomech.EXPANSION_K]
    gaps = np.linspace(0.001, optomech.EXPANSION_GAP, 10)
    lit, der = [], []
    for k in ks:
        for g in gaps:
            params = OptoParams(k, np.pi / 2 - g)
            lit.append(optomech.mean_q_odd(params, literal=True))
            der.append(optomech.mean_q_odd(params))
    table.append(Divergence("odd-time expansion <q>", "q", _nanmax_abs(lit, der), 0.0, "derived two-level"))

    lit, der = [], []
    for k in ks:
        for g in gaps:
            params = OptoParams(k, np.pi / 2 - g)
            for s in np.linspace(-0.05, 0.05, 11):
                tau = 2 * np.pi + s
                lit.append(optomech.mean_p_even(params, tau, literal=True))
                der.append(optomech.mean_p_even(params, tau))
    table.append(Divergence("even-time expansion <p>", "p", _nanmax_abs(lit, der), 0.0, "derived two-level"))
    return table
