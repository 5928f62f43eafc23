"""Schmidt (singular-value) analysis of the conversion block."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Band, Envelope, inner_product
from .green import GreenFunction, assemble

DEFAULT_N_KEPT = 32
TRUNCATION_LIMIT = 1e-8


@dataclass(frozen=True, eq=False)
class SchmidtData:
    """Singular values of G_rs (all of them) and the leading ``n_kept`` mode pairs."""

    conversion_singulars: np.ndarray = field(repr=False)
    input_modes: list[Envelope] = field(repr=False)
    output_modes: list[Envelope] = field(repr=False)
    n_kept: int

    @property
    def ce_target(self) -> float:
        return float(self.conversion_singulars[0] ** 2)

    @property
    def truncation_error(self) -> float:
        """Conversion weight carried by the discarded modes."""
        return float(np.sum(self.conversion_singulars[self.n_kept:] ** 2))


@dataclass(frozen=True)
class SelectivityReport:
    ce_target: float
    purity: float
    selectivity: float


def schmidt_decompose(g: GreenFunction, n_kept: int = DEFAULT_N_KEPT) -> SchmidtData:
    n = g.n_basis
    if n_kept > n:
        raise ValueError(f"n_kept={n_kept} exceeds basis size {n}")
    w, sv, vh = np.linalg.svd(g.G_rs)
    inputs = [g.coords_envelope(vh[k].conj(), Band.SIGNAL) for k in range(n_kept)]
    outputs = [g.coords_envelope(w[:, k], Band.REGISTER) for k in range(n_kept)]
    return SchmidtData(sv, inputs, outputs, n_kept)


def ce_of_input(sd: SchmidtData, signal_in: Envelope) -> float:
    """sum_n tau_n^2 |<psi_n, x>|^2 over the kept modes."""
    tau = sd.conversion_singulars[:sd.n_kept]
    overlaps = np.array([inner_product(psi, signal_in) for psi in sd.input_modes])
    return float(np.sum(tau ** 2 * np.abs(overlaps) ** 2))


def selectivity_from_singulars(tau: np.ndarray) -> SelectivityReport:
    tau = np.asarray(tau, dtype=float)
    total = float(np.sum(tau ** 2))
    if total <= 0:
        raise ValueError("selectivity is undefined for an all-zero spectrum")
    ce = float(tau[0] ** 2)
    purity = ce / total
    return SelectivityReport(ce, purity, ce * purity)


def selectivity(sd: SchmidtData) -> SelectivityReport:
    """Target-mode efficiency times Schmidt purity, tau_1^4 / sum tau_n^2."""
    return selectivity_from_singulars(sd.conversion_singulars)


def ce_selectivity_tradeoff(stage, gamma_grid, basis: str = "fourier", n_eff: int | None = None,
                            map_fn=map) -> list[tuple[float, float, float]]:
    """Rows of (effective strength, CE_target, S) for each coupling in ``gamma_grid``.

    ``gamma_grid`` holds raw couplings ``gamma`` (ascending).
    """
    gammas = [float(x) for x in gamma_grid]
    if any(b < a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gamma_grid must be ascending")

    def row(gamma):
        st = stage.with_gamma(gamma)
        g = assemble(st, basis, n_eff)
        tau = np.linalg.svd(g.G_rs, compute_uv=False)
        if tau[0] == 0:
            return (st.effective_strength, 0.0, 0.0)
        rep = selectivity_from_singulars(tau)
        return (st.effective_strength, rep.ce_target, rep.selectivity)

    return list(map_fn(row, gammas))
