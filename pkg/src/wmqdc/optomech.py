"""Analytic model of the optomechanical delayed-choice weak measurement.

One photon in the optomechanical arm drives the mirror (initially in its
ground state) into the Kerr coherent state

    |xi(tau)> = exp(i kerr(tau)) |amp(tau)>,
    kerr(tau) = k^2 (tau - sin tau),   amp(tau) = k (1 - exp(-i tau)),

with tau = omega_m t and k = g / omega_m. Detecting the ancilla in D_H and
the photon at the dark port leaves the mirror in

    psi = cos(a) / (2 sqrt2) |xi> - sin(a) / 4 (|xi> - |0>),

whose squared norm is the joint detection probability. Position and
momentum are reported as <q>/sigma and <p>/(hbar / 2 sigma).

Closed forms come in two flavours: the derived ones (default), which agree
with the state path to rounding error, and ``literal_*`` evaluators that
reproduce the printed formulas as originally published, kept only so their
divergence can be reported.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePostselectionError, ValidityWarning
from .fockspace import (
    DEGENERATE_NORM,
    ConditionalResult,
    FockVector,
    auto_cutoff,
    coherent_state,
)

K_MAX = 0.25
CUTOFF_MARGIN = 0.5
# Printed probability formula = PRINTED_PROBABILITY_SCALE * joint detection probability.
PRINTED_PROBABILITY_SCALE = 4.0
EXPANSION_K = 0.01
EXPANSION_GAP = 0.01
EXPANSION_DT = 0.1
_SLACK = 1e-12

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class OptoParams:
    """Coupling ``k``, ancilla rotation ``alpha`` (rad), Fock cutoff, kappa/omega_m."""

    k: float
    alpha: float
    cutoff: int | None = None
    kappa_ratio: float = 0.25

    def __post_init__(self):
        if not 0 < self.k <= K_MAX:
            raise ValueError(f"k must lie in (0, {K_MAX}] (weak coupling), got {self.k}")
        if not 0 <= self.alpha <= np.pi / 2 + 1e-15:
            raise ValueError(f"alpha must lie in [0, pi/2], got {self.alpha}")
        if self.cutoff is not None and (int(self.cutoff) != self.cutoff or self.cutoff < 1):
            raise ValueError(f"cutoff must be a positive integer, got {self.cutoff}")
        if not self.kappa_ratio > 0:
            raise ValueError(f"kappa_ratio must be > 0, got {self.kappa_ratio}")

    @classmethod
    def from_fraction(cls, k: float, alpha_over_halfpi: float, **kw) -> OptoParams:
        return cls(k=k, alpha=alpha_over_halfpi * np.pi / 2, **kw)

    @property
    def fock_cutoff(self) -> int:
        if self.cutoff is not None:
            return int(self.cutoff)
        return auto_cutoff(2 * self.k * (1 + CUTOFF_MARGIN))

    @property
    def gap(self) -> float:
        """``pi/2 - alpha``."""
        return np.pi / 2 - self.alpha


@dataclass(frozen=True)
class KerrState:
    tau: float
    phase: float
    amp: complex


def kerr_phase(k, tau):
    return k**2 * (tau - np.sin(tau))


def coherent_amp(k, tau):
    # k (1 - e^{-i tau}) written without cancellation near tau = 2 n pi
    return k * (2 * np.sin(tau / 2) ** 2 + 1j * np.sin(tau))


def kerr_state(params: OptoParams, tau: float) -> KerrState:
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return KerrState(float(tau), float(kerr_phase(params.k, tau)), complex(coherent_amp(params.k, tau)))


def kerr_vector(params: OptoParams, tau: float) -> FockVector:
    ks = kerr_state(params, tau)
    return np.exp(1j * ks.phase) * coherent_state(ks.amp, params.fock_cutoff)


def branch_weights(alpha):
    """Coefficients of |xi> and |0> in the post-selected mirror state."""
    c_xi = (SQRT2 * np.cos(alpha) - np.sin(alpha)) / 4
    c_vac = np.sin(alpha) / 4
    return c_xi, c_vac


def mirror_state(params: OptoParams, tau: float) -> FockVector:
    """Unnormalized post-selected mirror state, built from Fock vectors."""
    xi = kerr_vector(params, tau)
    vac = FockVector.vacuum(params.fock_cutoff)
    a = params.alpha
    return (np.cos(a) / (2 * SQRT2)) * xi - (np.sin(a) / 4) * (xi - vac)


def mirror_conditional(params: OptoParams, tau: float) -> ConditionalResult:
    return ConditionalResult.from_projection(mirror_state(params, tau))


# -- closed forms -------------------------------------------------------------


def _kernel(k, alpha, tau):
    tau = np.asarray(tau, dtype=float)
    amp = coherent_amp(k, tau)
    phase = kerr_phase(k, tau)
    x = 2 * k**2 * np.sin(tau / 2) ** 2  # |amp|^2 / 2
    overlap = np.exp(-x)
    # 1 - overlap * cos(phase), free of cancellation
    one_minus = -np.expm1(-x) + overlap * 2 * np.sin(phase / 2) ** 2
    c_xi, c_vac = branch_weights(alpha)
    s = SQRT2 * np.cos(alpha) / 4  # c_xi + c_vac
    norm = s**2 - 2 * c_xi * c_vac * one_minus
    lowering = c_xi * s * amp - c_xi * c_vac * amp * (one_minus - 1j * overlap * np.sin(phase))
    return norm, lowering


def _degenerate_mask(norm):
    return np.sqrt(np.maximum(norm, 0.0)) < DEGENERATE_NORM


def closed_success_probability(k, alpha, tau):
    """Joint probability of ancilla in D_H and photon at the dark port."""
    norm, _ = _kernel(k, alpha, tau)
    return norm


def closed_mean_q(k, alpha, tau):
    """<q>/sigma; NaN where the post-selection is degenerate."""
    norm, low = _kernel(k, alpha, tau)
    bad = _degenerate_mask(norm)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(bad, np.nan, 2 * low.real / np.where(bad, 1.0, norm))
    return out


def closed_mean_p(k, alpha, tau):
    """<p>/(hbar / 2 sigma); NaN where the post-selection is degenerate."""
    norm, low = _kernel(k, alpha, tau)
    bad = _degenerate_mask(norm)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(bad, np.nan, 2 * low.imag / np.where(bad, 1.0, norm))
    return out


def _printed_terms(k, alpha, tau):
    tau = np.asarray(tau, dtype=float)
    amp = k * (1 - np.exp(-1j * tau))
    phase = kerr_phase(k, tau)
    s1 = np.sin(alpha) ** 2
    s2 = np.sin(2 * alpha)
    return amp, phase, s1, s2


def literal_mean_q(k, alpha, tau):
    """Printed position formula: '+ sin^2' in the denominator and no vacuum overlap there."""
    amp, phase, s1, s2 = _printed_terms(k, alpha, tau)
    w = np.exp(1j * phase)
    num = (2 - s1 - SQRT2 * s2) * (amp + amp.conj()) + (s2 / SQRT2 - s1) * np.exp(-abs(amp) ** 2 / 2) * (
        w * amp + w.conj() * amp.conj()
    )
    den = 2 - SQRT2 * s2 + (s2 / SQRT2 + s1) * (w + w.conj())
    with np.errstate(divide="ignore", invalid="ignore"):
        return (num / den).real


def literal_mean_p(k, alpha, tau):
    """Printed momentum formula: exp(-|amp|^2) in the numerator, no overlap in the denominator."""
    amp, phase, s1, s2 = _printed_terms(k, alpha, tau)
    w = np.exp(1j * phase)
    num = (2 - s1 - SQRT2 * s2) * (amp - amp.conj()) + (s2 / SQRT2 - s1) * np.exp(-abs(amp) ** 2) * (
        w * amp - w.conj() * amp.conj()
    )
    den = 2 - SQRT2 * s2 + (s2 / SQRT2 - s1) * (w + w.conj())
    with np.errstate(divide="ignore", invalid="ignore"):
        return (-1j * num / den).real


def literal_success_probability(k, alpha, tau):
    """Printed release probability (its own normalization, vacuum overlap omitted)."""
    _, phase, s1, s2 = _printed_terms(k, alpha, tau)
    return 0.25 * (2 - SQRT2 * s2 + (s2 / SQRT2 - s1) * 2 * np.cos(phase))


# -- scalar public surface ----------------------------------------------------


def _scalar(value: float, what: str, params: OptoParams, tau: float) -> float:
    if np.isnan(value):
        raise DegeneratePostselectionError(f"{what} undefined at k={params.k}, alpha={params.alpha}, tau={tau}")
    return float(value)


def mean_q(params: OptoParams, tau: float, method: str = "closed") -> float:
    """<q>/sigma of the post-selected mirror.

    ``method`` is ``closed`` (derived formula), ``state`` (Fock-space
    expectation on :func:`mirror_conditional`) or ``literal`` (printed formula).
    """
    if method == "state":
        return mirror_conditional(params, tau).mean_q()
    if method == "closed":
        return _scalar(closed_mean_q(params.k, params.alpha, tau), "<q>", params, tau)
    if method == "literal":
        return float(literal_mean_q(params.k, params.alpha, tau))
    raise ValueError(f"unknown method {method!r}")


def mean_p(params: OptoParams, tau: float, method: str = "closed") -> float:
    """<p>/(hbar / 2 sigma) of the post-selected mirror; see :func:`mean_q`."""
    if method == "state":
        return mirror_conditional(params, tau).mean_p()
    if method == "closed":
        return _scalar(closed_mean_p(params.k, params.alpha, tau), "<p>", params, tau)
    if method == "literal":
        return float(literal_mean_p(params.k, params.alpha, tau))
    raise ValueError(f"unknown method {method!r}")


def success_probability(params: OptoParams, tau):
    """Joint probability of the D_H ancilla click and the dark-port photon click.

    Equals the squared norm of the post-selected mirror state. The printed
    release probability is ``PRINTED_PROBABILITY_SCALE`` times this value (up to
    the vacuum-overlap factor the printed form drops).
    """
    out = closed_success_probability(params.k, params.alpha, tau)
    return float(out) if np.ndim(out) == 0 else out


def printed_success_probability(params: OptoParams, tau):
    return PRINTED_PROBABILITY_SCALE * success_probability(params, tau)


def arrival_density(params: OptoParams, tau):
    """Photon arrival density per unit tau for a successful post-selection.

    ``r exp(-r tau) * P(tau)`` with ``r = kappa / omega_m``.
    """
    tau = np.asarray(tau, dtype=float)
    r = params.kappa_ratio
    out = r * np.exp(-r * tau) * closed_success_probability(params.k, params.alpha, tau)
    return float(out) if out.ndim == 0 else out


def amplification_factor(k: float, displacement: float = -1.0) -> float:
    """Post-selected displacement over the bare one-photon maximum ``4k``."""
    if not k > 0:
        raise ValueError(f"k must be > 0, got {k}")
    return displacement / (4 * k)


def bare_displacement_max(k: float) -> float:
    """Largest <q>/sigma a single photon imparts without post-selection."""
    return 4 * k


# -- small-quantity expansions ------------------------------------------------


def _nearest(tau: float, odd: bool) -> float:
    if odd:
        n = max(0, round((tau - np.pi) / (2 * np.pi)))
        return (2 * n + 1) * np.pi
    return 2 * np.pi * max(0, round(tau / (2 * np.pi)))


def _check_window(params: OptoParams, tau: float, centre: float) -> None:
    if not _inside(params, tau, centre):
        warnings.warn(
            f"expansion about tau={centre:.4f} used outside its window "
            f"(k={params.k}, pi/2-alpha={params.gap:.3g}, tau={tau})",
            ValidityWarning,
            stacklevel=3,
        )


def _inside(params: OptoParams, tau: float, centre: float) -> bool:
    return (
        params.k <= EXPANSION_K + _SLACK
        and params.gap <= EXPANSION_GAP + _SLACK
        and abs(tau - centre) <= EXPANSION_DT + _SLACK
    )


def in_odd_window(params: OptoParams, tau: float) -> bool:
    return _inside(params, tau, _nearest(tau, True))


def in_even_window(params: OptoParams, tau: float) -> bool:
    return _inside(params, tau, _nearest(tau, False))


def expansion_odd(params: OptoParams, tau: float = np.pi) -> FockVector:
    """Two-level state ``(pi/2 - a)/sqrt2 |0> - k |1>`` near tau = (2n+1) pi."""
    _check_window(params, tau, _nearest(tau, True))
    amps = np.zeros(params.fock_cutoff + 1, dtype=complex)
    amps[0] = params.gap / SQRT2
    amps[1] = -params.k
    return FockVector(amps)


def mean_q_odd(params: OptoParams, literal: bool = False) -> float:
    """<q>/sigma from the two-level state: ``-sqrt2 k g / (k^2 + g^2 / 2)``, g = pi/2 - a.

    ``literal=True`` evaluates the printed denominator ``k^2 + g/2``.
    """
    k, g = params.k, params.gap
    den = k**2 + (g / 2 if literal else g**2 / 2)
    if den == 0:
        return 0.0
    return -SQRT2 * k * g / den


def expansion_even(params: OptoParams, tau: float, literal: bool = False) -> FockVector:
    """Two-level state near tau = T = 2 n pi, with s = tau - T.

    Derived form: ``(g/sqrt2 - i k^2 T / 2) |0> - i (k s / 2) |1>``, which
    keeps the Kerr phase accumulated by T. ``literal=True`` gives the printed
    ``g/sqrt2 |0> - i k s |1>``.
    """
    centre = _nearest(tau, False)
    _check_window(params, tau, centre)
    s = tau - centre
    amps = np.zeros(params.fock_cutoff + 1, dtype=complex)
    if literal:
        amps[0] = params.gap / SQRT2
        amps[1] = -1j * params.k * s
    else:
        amps[0] = params.gap / SQRT2 - 0.5j * params.k**2 * centre
        amps[1] = -0.5j * params.k * s
    return FockVector(amps)


def two_level_mean_p(state: FockVector) -> float:
    c0, c1 = state[0], state[1]
    den = abs(c0) ** 2 + abs(c1) ** 2
    if den == 0:
        return 0.0
    return float(2 * (np.conj(c0) * c1).imag / den)


def mean_p_even(params: OptoParams, tau: float, literal: bool = False) -> float:
    return two_level_mean_p(expansion_even(params, tau, literal))
