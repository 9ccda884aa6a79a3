"""Spectral Stokes semigroups on G and F and their weighted distance."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import Spectrum, fluid_grid
from .errors import TailTooLarge
from .geometry import GeometryConfig
from .spectral import RadialProfile, disk_grid, hole_grid, mode_factor

TAIL_RTOL = 1e-6


def default_time_grid(T: float = 1.0, m: int = 64, t_min: float = 1e-4) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(t_min, T, m)])


def _disk_products(spec: Spectrum):
    m = 2 * spec.N_r + spec.n_max + 16
    return disk_grid(m, 1.0 if spec.cfg is None else spec.cfg.R_e)


def s0_coefficients(spec: Spectrum, theta: dict, r, w) -> np.ndarray:
    """(theta, psi_j)_{S0} over the grid (r, w) for every pair of the spectrum."""
    out = np.zeros(len(spec))
    for key, (idx, basis, X) in spec.blocks().items():
        f = theta.get(key)
        if f is None:
            continue
        n = key[0]
        f0, f1 = basis.eval_all(r, 1)
        val = (X @ f1) @ (w * f(r, 1))
        if n:
            val = val + n * n * ((X @ f0) @ (w * f(r, 0) / r ** 2))
        out[idx] = mode_factor(n) * val
    return out


def field_energy(theta: dict, r, w) -> float:
    tot = 0.0
    for (n, _), f in theta.items():
        tot += mode_factor(n) * float(np.dot(w, f(r, 1) ** 2 + (n * n * f(r, 0) ** 2 / r ** 2 if n else 0.0)))
    return tot


def expand(spec: Spectrum, theta: dict, check_tail: bool = True):
    """Eigen-coefficients of theta and the S0 norm of the omitted tail.

    On the disk the products are exact Gauss sums over G; on the perforated
    disk they run over F only, which is the S0(G) product with the extended
    eigenfunctions.
    """
    if spec.domain == "disk":
        r, w = _disk_products(spec)
        norm2 = field_energy(theta, r, w)
    else:
        r, w = fluid_grid(spec.cfg, spec.N_r)
        rg, wg = disk_grid(2 * spec.N_r + spec.n_max + 16, spec.cfg.R_e)
        norm2 = field_energy(theta, rg, wg)
    c = s0_coefficients(spec, theta, r, w)
    tail = math.sqrt(max(0.0, norm2 - float(c @ c)))
    norm = math.sqrt(norm2)
    if check_tail and spec.domain == "disk" and tail > TAIL_RTOL * norm:
        raise TailTooLarge(f"tail {tail:.3e} > {TAIL_RTOL:g} * {norm:.3e}")
    return c, tail, norm


def combine(pairs, coeffs) -> dict:
    """Field sum_j coeffs_j psi_j, merged per (mode, parity)."""
    out = {}
    for p, c in zip(pairs, coeffs):
        if c == 0.0:
            continue
        key = p.key
        acc = out.get(key)
        out[key] = c * p.coeffs if acc is None else acc + c * p.coeffs
    bases = {p.key: p.basis for p in pairs}
    return {k: RadialProfile.from_basis(bases[k], v, k[1]) for k, v in out.items()}


def apply_semigroup(spec: Spectrum, theta: dict, t: float) -> dict:
    """sum_j (theta, psi_j)_{S0} exp(-lambda_j t) psi_j over the computed pairs."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    c, _, _ = expand(spec, theta)
    return combine(spec.pairs, c * np.exp(-spec.lams * t))


@dataclass(frozen=True, eq=False)
class SemigroupQuery:
    theta: dict
    T: float
    times: np.ndarray
    specG: Spectrum
    specF: Spectrum
    cfg: GeometryConfig

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t[0] != 0.0 or np.any(np.diff(t) <= 0) or t[-1] > self.T * (1 + 1e-14):
            raise ValueError("time grid must start at 0, increase strictly and stay within [0, T]")


@dataclass(frozen=True)
class SemigroupGap:
    times: np.ndarray
    weighted: np.ndarray
    sup: float
    theta_norm: float
    tail_G: float
    defect_F: float


class _Sampler:
    """Gradients of eigenfunctions on the hole and fluid grids, grouped by mode key."""

    def __init__(self, spec: Spectrum, grids):
        self.blocks = {}
        for key, (idx, basis, X) in spec.blocks().items():
            rows = []
            for r, _ in grids:
                f0, f1 = basis.eval_all(r, 1)
                rows.append((X @ f1, (X @ f0) / r))
            self.blocks[key] = (idx, rows)


def semigroup_gap(q: SemigroupQuery) -> SemigroupGap:
    """Grid sup of exp(lambda_1^G t) ||T_G(t) theta - T_F(t) theta||_{S0(G)}.

    The difference is sampled directly on the hole and on the fluid, so no
    squared norms are subtracted.  The F semigroup acts on the S0(G)
    projection of theta onto the extended F eigenfunctions; its defect is
    reported next to the G tail.
    """
    cG, tailG, norm = expand(q.specG, q.theta)
    cF, defF, _ = expand(q.specF, q.theta, check_tail=False)
    rf, wf = fluid_grid(q.cfg, max(q.specG.N_r, q.specF.N_r))
    rh, wh = hole_grid(q.cfg.eps_hole)
    grids = [(rh, wh), (rf, wf)]
    sG, sF = _Sampler(q.specG, grids), _Sampler(q.specF, grids)
    lamG, lamF = q.specG.lams, q.specF.lams
    lam1 = lamG[0]
    out = np.empty(len(q.times))
    for it, t in enumerate(q.times):
        aG, aF = cG * np.exp(-lamG * t), cF * np.exp(-lamF * t)
        tot = 0.0
        for key in set(sG.blocks) | set(sF.blocks):
            n = key[0]
            for gi, (r, w) in enumerate(grids):
                dr = np.zeros_like(r)
                dp = np.zeros_like(r)
                if key in sG.blocks:
                    idx, rows = sG.blocks[key]
                    dr += aG[idx] @ rows[gi][0]
                    dp += aG[idx] @ rows[gi][1]
                if key in sF.blocks and gi == 1:
                    idx, rows = sF.blocks[key]
                    dr -= aF[idx] @ rows[gi][0]
                    dp -= aF[idx] @ rows[gi][1]
                tot += mode_factor(n) * float(np.dot(w, dr ** 2 + n * n * dp ** 2))
        out[it] = math.exp(lam1 * t) * math.sqrt(tot)
    return SemigroupGap(np.asarray(q.times, float), out, float(out.max()), norm, tailG, defF)


def eigen_theta(spec: Spectrum, k: int) -> dict:
    """The k-th (1-based) eigenfunction of a spectrum as a field."""
    p = spec.pairs[k - 1]
    return {p.key: p.profile}
