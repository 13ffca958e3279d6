"""Dispersive shifts of a transmon coupled to two resonators.

Energies are frequencies (``h = 1``); with GHz inputs every output is in GHz.
The transmon Hamiltonian ``4 E_C (n - n_g)^2 - E_J cos(phi)`` is tridiagonal in
the charge basis. Each resonator is diagonalized jointly with the transmon
through the coupling ``g n (a + a^dag)``, keeping the lowest transmon levels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.optimize import brentq

__all__ = [
    "Resonator",
    "TransmonSpec",
    "CutoffTooSmall",
    "StateIdentificationAmbiguous",
    "EqualOpposite",
    "transmon_levels",
    "transmon_eigensystem",
    "qubit_frequency",
    "dispersive_shift",
    "dispersive_shift_perturbative",
    "dispersive_shift_koch",
    "chi_sweep",
    "find_equal_opposite",
    "fig4b_spec",
    "write_chi_csv",
]


class CutoffTooSmall(RuntimeError):
    pass


class StateIdentificationAmbiguous(RuntimeError):
    pass


@dataclass(frozen=True)
class Resonator:
    omega: float
    g: float
    photon_cutoff: int = 5


@dataclass(frozen=True)
class TransmonSpec:
    E_J: float
    E_C: float
    n_g: float = 0.0
    charge_cutoff: int = 20
    resonators: tuple[Resonator, ...] = field(default_factory=tuple)
    # transmon levels kept in the joint transmon-resonator problem
    n_levels: int = 8

    def __post_init__(self):
        if not (self.E_J > 0 and self.E_C > 0):
            raise ValueError(f"E_J and E_C must be positive, got {self.E_J}, {self.E_C}")
        if self.charge_cutoff < 1 or self.n_levels < 3:
            raise ValueError("charge_cutoff must be >= 1 and n_levels >= 3")

    def with_cutoffs(self, extra: int) -> "TransmonSpec":
        """Every truncation enlarged by ``extra``."""
        res = tuple(replace(r, photon_cutoff=r.photon_cutoff + extra) for r in self.resonators)
        return replace(self, charge_cutoff=self.charge_cutoff + extra,
                       n_levels=self.n_levels + extra, resonators=res)


def fig4b_spec(E_C: float, **kw) -> TransmonSpec:
    """Transmon and resonators of the two-cavity circuit, in GHz."""
    res = (Resonator(7.6, 0.008), Resonator(7.9, 0.015))
    return TransmonSpec(E_J=25.0, E_C=E_C, resonators=res, **kw)


def transmon_eigensystem(spec: TransmonSpec, n: int, cutoff: int | None = None):
    """Lowest ``n`` eigenvalues, eigenvectors and the charge grid."""
    cutoff = spec.charge_cutoff if cutoff is None else cutoff
    charges = np.arange(-cutoff, cutoff + 1)
    n = min(n, len(charges))
    diag = 4 * spec.E_C * (charges - spec.n_g) ** 2
    off = np.full(2 * cutoff, -spec.E_J / 2)
    e, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, n - 1))
    return e, v, charges


def transmon_levels(spec: TransmonSpec, n: int = 6, check: bool = True) -> np.ndarray:
    """Lowest ``n`` transmon energies, ascending.

    With ``check`` the charge cutoff is enlarged by 5; a shift of any returned
    level above ``1e-9`` raises :class:`CutoffTooSmall`.
    """
    e, _, _ = transmon_eigensystem(spec, n)
    if check:
        e2, _, _ = transmon_eigensystem(spec, n, spec.charge_cutoff + 5)
        shift = np.max(np.abs(e2[:len(e)] - e))
        if shift > 1e-9:
            raise CutoffTooSmall(f"levels moved by {shift:.3g} when charge_cutoff grew by 5")
    return e


def qubit_frequency(spec: TransmonSpec) -> float:
    e = transmon_levels(spec, 2, check=False)
    return float(e[1] - e[0])


def _joint_hamiltonian(spec, res):
    e, v, charges = transmon_eigensystem(spec, spec.n_levels)
    nq = len(e)
    nop = v.T @ (charges[:, None] * v)
    nph = res.photon_cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, nph)), 1)
    H = (np.kron(np.diag(e - e[0]), np.eye(nph))
         + np.kron(np.eye(nq), res.omega * a.T @ a)
         + res.g * np.kron(nop, a + a.T))
    return H, nph


def dispersive_shift(spec: TransmonSpec, index: int, min_overlap: float = 0.5) -> float:
    """``chi = (E_11 - E_10 - E_01 + E_00) / 2`` for resonator ``index``.

    ``E_qp`` is the dressed energy with transmon level ``q`` and ``p`` photons,
    taken as the eigenstate of largest overlap with the bare state; the
    assignment is rejected when that overlap is below ``min_overlap`` or within
    0.1 of the next best (a near-degenerate crossing). Positive
    ``chi`` means the resonator frequency rises when the qubit is excited.
    """
    res = spec.resonators[index]
    if res.g == 0:
        return 0.0
    H, nph = _joint_hamiltonian(spec, res)
    E, U = eigh(H)
    energies = {}
    for q, p in ((0, 0), (0, 1), (1, 0), (1, 1)):
        weights = U[q * nph + p] ** 2
        j = int(np.argmax(weights))
        runner_up = np.partition(weights, -2)[-2]
        if weights[j] < min_overlap or weights[j] - runner_up < 0.1:
            raise StateIdentificationAmbiguous(
                f"bare state |{q},{p}> overlaps {weights[j]:.2f} and {runner_up:.2f} "
                "with two eigenstates")
        energies[q, p] = E[j]
    return 0.5 * (energies[1, 1] - energies[1, 0] - energies[0, 1] + energies[0, 0])


def dispersive_shift_perturbative(spec: TransmonSpec, index: int) -> float:
    """Second-order perturbative ``chi`` over all kept transmon levels.

    Includes the counter-rotating terms, so it agrees with the diagonalization
    up to corrections of relative order ``(g / Delta)^2``.
    """
    res = spec.resonators[index]
    e, v, charges = transmon_eigensystem(spec, spec.n_levels)
    n2 = (v.T @ (charges[:, None] * v)) ** 2
    w = res.omega

    def shift_per_photon(q):
        # d E_qp / d p at second order
        de = e[q] - e
        mask = np.arange(len(e)) != q
        return np.sum(n2[q, mask] * (1 / (de[mask] + w) + 1 / (de[mask] - w)))

    return 0.5 * res.g ** 2 * (shift_per_photon(1) - shift_per_photon(0))


def dispersive_shift_koch(spec: TransmonSpec, index: int) -> float:
    """Rotating-wave transmon estimate ``-g_eff^2 E_C / (Delta (Delta - E_C))``.

    ``g_eff = g |<0|n|1>|`` and ``Delta`` is the qubit-resonator detuning. Only
    reliable for ``|Delta|`` of a few ``E_C`` and ``E_J / E_C`` large.
    """
    res = spec.resonators[index]
    e, v, charges = transmon_eigensystem(spec, 2)
    g_eff = res.g * abs(v[:, 0] @ (charges * v[:, 1]))
    delta = e[1] - e[0] - res.omega
    return -g_eff ** 2 * spec.E_C / (delta * (delta - spec.E_C))


def chi_sweep(E_C_values, base: TransmonSpec | None = None, **kw):
    """Rows ``(E_C, chi_1, chi_2)`` across anharmonicities; ambiguous points give NaN."""
    rows = []
    for ec in E_C_values:
        spec = fig4b_spec(ec, **kw) if base is None else replace(base, E_C=ec)
        chis = []
        for j in range(len(spec.resonators)):
            try:
                chis.append(dispersive_shift(spec, j))
            except StateIdentificationAmbiguous:
                chis.append(math.nan)
        rows.append((float(ec), *chis))
    return rows


@dataclass(frozen=True)
class EqualOpposite:
    E_C: float
    chi: tuple[float, float]
    delta: tuple[float, float]

    def straddling(self, j: int) -> bool:
        return 0.0 < self.delta[j] < self.E_C

    @property
    def one_straddling_one_dispersive(self) -> bool:
        """One resonator with ``0 < Delta < E_C``, the other with ``Delta > E_C``."""
        d, ec = self.delta, self.E_C
        return (0 < d[0] < ec and d[1] > ec) or (0 < d[1] < ec and d[0] > ec)


def _chis(E_C, base):
    spec = replace(base, E_C=E_C)
    return spec, dispersive_shift(spec, 0), dispersive_shift(spec, 1)


def find_equal_opposite(base: TransmonSpec | None = None, E_C_range=(0.2, 0.6),
                        n_scan: int = 81) -> list[EqualOpposite]:
    """Anharmonicities where ``chi_1 = -chi_2``, both nonzero.

    A sign change of ``chi_1 + chi_2`` between scan points counts as a root
    only if neither shift changes sign in that interval (so it is not a pole of
    one of them crossing a resonance). Each root is polished with Brent's method.
    """
    base = fig4b_spec(E_C_range[0]) if base is None else base
    if len(base.resonators) != 2:
        raise ValueError("need exactly two resonators")
    grid = np.linspace(*E_C_range, n_scan)
    samples = []
    for ec in grid:
        try:
            _, c1, c2 = _chis(ec, base)
        except StateIdentificationAmbiguous:
            c1 = c2 = math.nan
        samples.append((ec, c1, c2))

    roots = []
    for (a, a1, a2), (b, b1, b2) in zip(samples, samples[1:]):
        if not np.isfinite([a1, a2, b1, b2]).all():
            continue
        if (a1 + a2) * (b1 + b2) > 0 or a1 * b1 <= 0 or a2 * b2 <= 0 or a1 * a2 >= 0:
            continue
        ec = brentq(lambda x: sum(_chis(x, base)[1:]), a, b, xtol=1e-12, rtol=1e-12)
        spec, c1, c2 = _chis(ec, base)
        wq = qubit_frequency(spec)
        delta = tuple(wq - r.omega for r in spec.resonators)
        roots.append(EqualOpposite(float(ec), (c1, c2), delta))
    return roots


def write_chi_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["E_C_GHz", "chi_1_GHz", "chi_2_GHz"])
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
