"""Probe states and operators on the symmetric (Dicke) subspace of N atoms.

Basis vector ``|n>`` has ``n`` atoms excited, ``n = 0..N``.  Density matrices
and observables are plain complex ``numpy`` arrays of shape ``(N+1, N+1)``;
the checks below validate them where a function needs the guarantee.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10

FAMILIES = ("ghz", "product", "sine")


@dataclass(frozen=True)
class SymmetricState:
    """Pure state ``sum_n c_n |n>`` of ``n_atoms`` atoms."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if amps.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"amplitudes must have length n_atoms+1={self.n_atoms + 1}, got shape {amps.shape}"
            )
        norm = np.sum(np.abs(amps) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"amplitudes not normalized: sum |c_n|^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    @classmethod
    def from_vector(cls, vec) -> "SymmetricState":
        """Normalize an arbitrary nonzero vector into a state."""
        vec = np.asarray(vec, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(len(vec) - 1, vec / norm)

    def overlap(self, other: "SymmetricState") -> float:
        """Fidelity ``|<self|other>|^2``."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    def to_json(self) -> dict:
        return {
            "n_atoms": int(self.n_atoms),
            "amplitudes": [{"re": float(c.real), "im": float(c.imag)} for c in self.amplitudes],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SymmetricState":
        try:
            n_atoms = int(data["n_atoms"])
            amps = [complex(a["re"], a["im"]) for a in data["amplitudes"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed state JSON: {exc}") from exc
        return cls(n_atoms, np.array(amps))


class Spectral(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_n(n_atoms):
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValueError(f"n_atoms must be a positive integer, got {n_atoms!r}")
    return int(n_atoms)


def make_ghz(n_atoms: int) -> SymmetricState:
    """GHZ state ``(|0> + |N>)/sqrt(2)``."""
    n = _check_n(n_atoms)
    amps = np.zeros(n + 1, dtype=complex)
    amps[0] = amps[n] = 1 / np.sqrt(2)
    return SymmetricState(n, amps)


def make_product(n_atoms: int) -> SymmetricState:
    """Uncorrelated state ``((|0> + |1>)/sqrt(2))^N`` in the Dicke basis.

    ``c_n = sqrt(binom(N, n)) / 2^(N/2)``, evaluated in log space so that
    large N does not overflow.
    """
    n = _check_n(n_atoms)
    k = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    amps = np.exp(0.5 * log_binom - 0.5 * n * np.log(2.0))
    return SymmetricState.from_vector(amps)


def make_sine(n_atoms: int) -> SymmetricState:
    """Sine state, ``c_n`` proportional to ``sin(pi (n+1) / (N+2))``."""
    n = _check_n(n_atoms)
    amps = np.sin(np.pi * (np.arange(n + 1) + 1) / (n + 2))
    return SymmetricState.from_vector(amps)


def make_state(family: str, n_atoms: int) -> SymmetricState:
    builders = {"ghz": make_ghz, "product": make_product, "sine": make_sine}
    try:
        return builders[family](n_atoms)
    except KeyError:
        raise ValueError(f"unknown state family {family!r}; expected one of {FAMILIES}") from None


def number_operator(n_atoms: int) -> np.ndarray:
    """Generator ``H = sum_n n |n><n|``."""
    return np.diag(np.arange(_check_n(n_atoms) + 1, dtype=float)).astype(complex)


def to_density(state: SymmetricState) -> np.ndarray:
    c = state.amplitudes
    return np.outer(c, c.conj())


def hermiticity_residual(matrix) -> float:
    a = np.asarray(matrix)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(matrix, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    resid = hermiticity_residual(a)
    if resid > tol:
        raise ValueError(f"{name} is not Hermitian: max |A - A^H| = {resid:.3e} > {tol:.1e}")
    return a


def check_density(rho, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, no negative eigenvalues."""
    rho = check_hermitian(rho, name="density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3e}")
    return rho


def eigh(matrix, tol: float = HERMITIAN_TOL) -> Spectral:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized after validation so that round-off in the
    lower triangle cannot leak into the result.
    """
    a = check_hermitian(matrix, tol=tol)
    vals, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    return Spectral(vals, vecs)
