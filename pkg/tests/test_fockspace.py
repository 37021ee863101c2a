import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmqdc.errors import CutoffMismatchError, DegeneratePostselectionError, TruncationError
from wmqdc.fockspace import (
    ConditionalResult,
    FockVector,
    annihilation,
    auto_cutoff,
    coherent_state,
    creation,
    displace,
    expect,
    fix_global_phase,
    inner,
    momentum,
    normalized_expect,
    number,
    position,
)

N = 16
BIG = 40


def coherent_overlap(b1, b2):
    return np.exp(-(abs(b1) ** 2 + abs(b2) ** 2) / 2 + np.conj(b1) * b2)


small_complex = st.builds(
    lambda r, phi: r * np.exp(1j * phi),
    st.floats(0, 1),
    st.floats(0, 2 * np.pi),
)


def test_annihilation_structure():
    c = annihilation(5).matrix
    expected = np.zeros((6, 6))
    for n in range(1, 6):
        expected[n - 1, n] = np.sqrt(n)
    assert np.array_equal(c, expected)
    assert np.array_equal(creation(5).matrix, expected.T)


def test_quadratures_hermitian():
    for op in (position(N), momentum(N)):
        assert np.max(np.abs(op.matrix - op.matrix.conj().T)) <= 1e-14


def test_vacuum_coherent():
    v = coherent_state(0, N)
    assert v[0] == 1
    assert np.all(v.amplitudes[1:] == 0)


def test_coherent_mean_number():
    # Poisson mean |beta|^2
    assert expect(coherent_state(0.01, N), number(N)).real == pytest.approx(1e-4, rel=1e-12)


def test_coherent_position():
    assert expect(coherent_state(0.1, N), position(N)).real == pytest.approx(0.2, rel=1e-12)


def test_coherent_norm_and_truncation():
    assert coherent_state(0.5, N).norm() >= 1 - 1e-12
    with pytest.raises(TruncationError):
        coherent_state(0.02, 2)
    with pytest.raises(ValueError):
        coherent_state(0.1, 0)


def test_displace_vacuum_is_coherent():
    eta = 0.3 - 0.2j
    got = displace(FockVector.vacuum(N), eta)
    assert np.max(np.abs(got.amplitudes - coherent_state(eta, N).amplitudes)) <= 1e-12


def test_displace_inverse():
    vac = FockVector.vacuum(N)
    back = displace(displace(vac, 0.2j + 0.1), -(0.2j + 0.1))
    assert np.max(np.abs(back.amplitudes - vac.amplitudes)) <= 1e-12


def test_displaced_overlap_with_opposite_coherent():
    eta = 0.01
    got = inner(coherent_state(-eta, N), displace(FockVector.vacuum(N), eta))
    assert got == pytest.approx(np.exp(-2 * eta**2), abs=1e-14)
    assert abs(got) == pytest.approx(0.9998, abs=1e-4)


def test_displace_truncation_error():
    with pytest.raises(TruncationError):
        displace(FockVector.vacuum(3), 0.5)


def test_inner_basics():
    assert inner(FockVector.vacuum(N), FockVector.vacuum(N)) == 1
    assert inner(FockVector.vacuum(N), FockVector.basis(1, N)) == 0
    got = inner(coherent_state(0.1, N), coherent_state(0.2, N))
    assert got == pytest.approx(np.exp(-(0.01 + 0.04) / 2 + 0.02), abs=1e-14)


def test_inner_conjugate_linear():
    a = coherent_state(0.2j, N)
    b = coherent_state(0.1, N)
    assert inner(2j * a, b) == pytest.approx(-2j * inner(a, b))


def test_cutoff_mismatch():
    with pytest.raises(CutoffMismatchError):
        inner(FockVector.vacuum(4), FockVector.vacuum(5))
    with pytest.raises(CutoffMismatchError):
        position(4).apply(FockVector.vacuum(5))


def test_number_expectation():
    assert expect(FockVector.basis(1, N), number(N)) == 1


def test_maximal_negative_state():
    psi = FockVector.vacuum(N) - FockVector.basis(1, N)
    assert normalized_expect(psi, position(N)).real == pytest.approx(-1, abs=1e-15)


def test_coherent_amplitude_example():
    beta = 0.005 * (1 - np.exp(-1j * np.pi))
    assert expect(coherent_state(beta, N), position(N)).real == pytest.approx(0.02, abs=1e-15)


def test_zero_norm_is_degenerate():
    with pytest.raises(DegeneratePostselectionError):
        normalized_expect(FockVector(np.zeros(N + 1)), position(N))
    with pytest.raises(DegeneratePostselectionError):
        ConditionalResult.from_projection(FockVector(np.zeros(N + 1)))


def test_fix_global_phase():
    v = FockVector([0.1, -0.5j, 0.2])
    fixed = fix_global_phase(v)
    assert fixed[1] == pytest.approx(0.5)
    assert abs(inner(fixed, v)) == pytest.approx(v.norm_sq())


def test_auto_cutoff():
    assert auto_cutoff(0.0) == 16
    assert auto_cutoff(2 * 0.25 * 1.5) == 16
    big = auto_cutoff(3.0)
    assert big > 16
    assert abs(coherent_state(3.0, big)[-1]) ** 2 < 1e-12


@settings(max_examples=50, deadline=None)
@given(small_complex, st.integers(0, 5))
def test_displace_unitary(eta, n):
    v = FockVector.basis(n, BIG)
    assert displace(v, eta).norm() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(small_complex)
def test_displace_matches_coherent(beta):
    got = displace(FockVector.vacuum(BIG), beta)
    assert np.max(np.abs(got.amplitudes - coherent_state(beta, BIG).amplitudes)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(small_complex, small_complex)
def test_overlap_law(b1, b2):
    got = inner(coherent_state(b1, BIG), coherent_state(b2, BIG))
    assert abs(got - coherent_overlap(b1, b2)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=N + 1, max_size=N + 1))
def test_quadrature_expectations_real(amps):
    v = FockVector(amps)
    for op in (position(N), momentum(N)):
        val = expect(v, op)
        assert abs(val.imag) <= 1e-12 * (1 + abs(val.real))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=N + 1, max_size=N + 1),
    st.sampled_from([0, 1]),
)
def test_parity_selection(amps, parity):
    amps = np.array(amps)
    amps[np.arange(N + 1) % 2 != parity] = 0
    assert abs(expect(FockVector(amps), position(N))) <= 1e-14
