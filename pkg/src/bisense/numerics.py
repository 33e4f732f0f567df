"""Numerical kernels: Hermitian EVD, polynomial rooting, padded IDFT, loaded inverse.

Everything here is a pure function of its arguments and safe to call from
multiple threads.
"""

from dataclasses import dataclass

import numpy as np

from bisense.errors import ContractViolation, SingularMatrix

HERMITIAN_RTOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectrum of a Hermitian matrix, eigenvalues sorted descending."""

    eigenvalues: np.ndarray  # real, shape (n,), descending
    eigenvectors: np.ndarray  # complex, shape (n, n), columns match eigenvalues


def hermitian_evd(a: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises ContractViolation if `a` is not square or departs from Hermitian
    symmetry by more than a relative 1e-8. Callers are expected to
    Hermitianize ((A + A^H)/2) first.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    norm = np.linalg.norm(a)
    if norm > 0 and np.linalg.norm(a - a.conj().T) > HERMITIAN_RTOL * norm:
        raise ContractViolation("matrix is not Hermitian to tolerance")
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    return EigenDecomposition(eigenvalues=w[order], eigenvectors=v[:, order])


def polynomial_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of a complex polynomial given coefficients in ascending power.

    Coefficients are scaled by their maximum magnitude before the companion
    matrix is formed; degrees of a few hundred stay well conditioned.
    Returns exactly `degree` roots. A degree-0 polynomial yields an empty
    array; the zero polynomial is rejected.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), trim="b")
    if c.size == 0:
        raise ContractViolation("zero polynomial has no well-defined roots")
    if c.size == 1:
        return np.empty(0, dtype=complex)
    c = c / np.max(np.abs(c))
    # np.roots expects descending powers and balances the companion matrix.
    return np.roots(c[::-1])


def polyval_ascending(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluate a polynomial with ascending-power coefficients."""
    return np.polyval(np.asarray(coeffs, dtype=complex)[::-1], z)


def ifft_padded(s: np.ndarray, n_out: int) -> np.ndarray:
    """Zero-padded inverse DFT with kernel e^{+j 2 pi k n / n_out}, unnormalized.

    out[n] = sum_k s[k] e^{+j 2 pi k n / n_out}, so a delay phase ramp
    e^{-j 2 pi k dfreq tau} across k peaks at a positive bin.
    """
    s = np.asarray(s, dtype=complex)
    if n_out < s.size:
        raise ContractViolation(f"output size {n_out} < input length {s.size}")
    padded = np.zeros(n_out, dtype=complex)
    padded[: s.size] = s
    return np.fft.ifft(padded) * n_out


def regularized_inverse(a: np.ndarray, load: float) -> np.ndarray:
    """(A + load*I)^{-1} for Hermitian PSD A.

    Raises SingularMatrix when the loaded matrix has condition number
    above 1e14.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    if load < 0:
        raise ContractViolation("diagonal load must be nonnegative")
    loaded = a + load * np.eye(a.shape[0])
    if np.linalg.cond(loaded) > 1e14:
        raise SingularMatrix("loaded matrix is numerically singular")
    return np.linalg.inv(loaded)
