"""Merged Stokes spectra on the disk and the perforated disk."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GroupMismatch, ModeTruncationInsufficient
from .geometry import GeometryConfig, build_geometry
from .spectral import (ANNULUS, DISK, GramPair, ModeBasis, RadialProfile, assemble_gram,
                       build_mode_basis, hole_grid, log_grid, mode_factor, solve_gep)

PARITY_RANK = {"radial": 0, "cos": 1, "sin": 2}
GROUP_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    n: int
    parity: str
    coeffs: np.ndarray
    domain: str
    residual: float
    basis: ModeBasis = field(repr=False)

    @property
    def profile(self) -> RadialProfile:
        return RadialProfile.from_basis(self.basis, self.coeffs, self.parity)

    @property
    def key(self):
        return (self.n, self.parity)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenpairs with multiplicity groups (0-based index lists)."""

    pairs: tuple
    groups: tuple
    domain: str
    cfg: GeometryConfig | None
    N_r: int
    n_max: int
    bases: dict = field(repr=False, default_factory=dict)
    grams: dict = field(repr=False, default_factory=dict)
    cutoff: float | None = None

    def __len__(self):
        return len(self.pairs)

    @property
    def lams(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def group_of(self, idx: int) -> list:
        for g in self.groups:
            if idx in g:
                return list(g)
        raise IndexError(idx)

    def blocks(self) -> dict:
        """Map (n, parity) to (indices, basis, coefficient rows) for vectorised evaluation."""
        out = {}
        for j, p in enumerate(self.pairs):
            out.setdefault(p.key, []).append(j)
        return {k: (np.array(ix), self.pairs[ix[0]].basis,
                    np.array([self.pairs[j].coeffs for j in ix])) for k, ix in out.items()}

    def head(self, N: int) -> "Spectrum":
        """First N pairs, extended so that no multiplicity group is split."""
        N = min(N, len(self.pairs))
        if N > 0:
            N = max(self.group_of(N - 1)) + 1
        groups = tuple(g for g in self.groups if max(g) < N)
        return Spectrum(self.pairs[:N], groups, self.domain, self.cfg, self.N_r, self.n_max,
                        self.bases, self.grams, self.cutoff)


def group_indices(lams, rtol: float = GROUP_RTOL) -> tuple:
    groups, cur = [], [0] if len(lams) else []
    for i in range(1, len(lams)):
        if abs(lams[i] - lams[cur[0]]) <= rtol * abs(lams[cur[0]]):
            cur.append(i)
        else:
            groups.append(tuple(cur))
            cur = [i]
    if cur:
        groups.append(tuple(cur))
    return tuple(groups)


def mode_spectrum(cfg, domain: str, n: int, N_r: int, quad_order=None, eig_tol=1e-10):
    basis = build_mode_basis(cfg, domain, n, N_r, quad_order)
    g = assemble_gram(basis)
    lam, X = solve_gep(g, tol=eig_tol)
    return basis, g, lam, X


def compute_spectrum(cfg: GeometryConfig | None, domain: str, k_max: int | None = 12,
                     N_r: int = 48, n_max: int = 12, quad_order: int | None = None,
                     eig_tol: float = 1e-10) -> Spectrum:
    """Merge per-mode pencils into one ascending spectrum.

    Modes n >= 1 contribute a cos and a sin copy of every radial eigenvector.
    With ``k_max=None`` every computed eigenpair is kept, so the span equals
    the full trial space; otherwise the list is cut after the group that
    contains index k_max and the first eigenvalue of mode n_max + 1 must
    exceed the last kept value.
    """
    if k_max is not None and k_max < 1:
        raise ValueError("k_max must be >= 1")
    entries, bases, grams = [], {}, {}
    for n in range(n_max + 1):
        basis, g, lam, X = mode_spectrum(cfg, domain, n, N_r, quad_order, eig_tol)
        bases[n], grams[n] = basis, g
        nA = np.linalg.norm(g.A, 2)
        for j in range(lam.size):
            x = X[:, j]
            res = float(np.linalg.norm(g.A @ x - lam[j] * (g.B @ x)) / (nA * np.linalg.norm(x)))
            for par in (("radial",) if n == 0 else ("cos", "sin")):
                entries.append(EigenPair(float(lam[j]), n, par, x, domain, res, basis))
    entries.sort(key=lambda p: (p.lam, p.n, PARITY_RANK[p.parity]))
    cutoff = None
    if k_max is not None:
        groups = group_indices([p.lam for p in entries])
        last = next(max(g) for g in groups if max(g) >= k_max - 1)
        entries = entries[:last + 1]
        _, _, lam_next, _ = mode_spectrum(cfg, domain, n_max + 1, N_r, quad_order, eig_tol)
        cutoff = float(lam_next[0])
        if not cutoff > entries[-1].lam:
            raise ModeTruncationInsufficient(
                f"mode {n_max + 1} starts at {cutoff:.6g} <= lambda_{k_max}={entries[-1].lam:.6g}")
    groups = group_indices([p.lam for p in entries])
    return Spectrum(tuple(entries), groups, domain, cfg, N_r, n_max, bases, grams, cutoff)


# ------------------------------------------------------------- comparisons

def fluid_grid(cfg: GeometryConfig, N_r: int = 48):
    """Composite rule on (eps, R_e) used for all S0(G) products of extended fields.

    Disk eigenfunctions are polynomials of degree about 2 N_r in r, so the
    panels are short in ln r and carry N_r + 16 Gauss points each.
    """
    return log_grid(cfg.eps_hole, cfg.R_e, m=N_r + 16, panel=0.25)


def pair_gradients(pairs, r):
    """Samples of (f', f/r) for eigenpairs sharing one basis, each of shape (len, len(r))."""
    basis = pairs[0].basis
    X = np.array([p.coeffs for p in pairs])
    f0, f1 = basis.eval_all(r, 1)
    return X @ f1, (X @ f0) / r


def s0_cross_gram(pairs_a, pairs_b, r, w) -> np.ndarray:
    """(psi_a, psi_b)_{S0} over the grid for eigenpair lists; zero across modes."""
    C = np.zeros((len(pairs_a), len(pairs_b)))
    keys = {p.key for p in pairs_a} & {p.key for p in pairs_b}
    for key in keys:
        ia = [i for i, p in enumerate(pairs_a) if p.key == key]
        ib = [j for j, p in enumerate(pairs_b) if p.key == key]
        n = key[0]
        ar, ap = pair_gradients([pairs_a[i] for i in ia], r)
        br, bp = pair_gradients([pairs_b[j] for j in ib], r)
        blk = ar @ (w * br).T + n * n * (ap @ (w * bp).T)
        C[np.ix_(ia, ib)] = mode_factor(n) * blk
    return C


def projection_gap(C: np.ndarray) -> float:
    """Operator norm of P_U - P_V for orthonormal bases with cross-Gram C = U^T V."""
    p, q = C.shape
    G = np.block([[np.eye(p), C], [C.T, np.eye(q)]])
    w, V = np.linalg.eigh(G)
    keep = w > 1e-12 * w.max()
    Z = V[:, keep] / np.sqrt(w[keep])          # G-orthonormal coordinates of the merged span
    # matrix of P_U in the orthonormal basis [U, V] Z is Z^T (Y^T U)(U^T Y) Z
    GU = G[:, :p]
    PU = GU @ GU.T
    GV = G[:, p:]
    PV = GV @ GV.T
    D = Z.T @ (PU - PV) @ Z
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (D + D.T))))) if D.size else 0.0


def residual_gram(pairs_u, pairs_v, C, cfg: GeometryConfig, r, w) -> np.ndarray:
    """S0(G) Gram matrix of the residuals u_i - sum_j C_ij v_j.

    The residual gradients are sampled on the fluid grid and on the hole
    (where the extended v_j are constant), so small angles do not suffer
    the cancellation of 1 - cos^2.
    """
    rh, wh = hole_grid(cfg.eps_hole)
    p = len(pairs_u)
    E = np.zeros((p, p))
    for key in {q.key for q in pairs_u}:
        n = key[0]
        iu = [i for i, q in enumerate(pairs_u) if q.key == key]
        jv = [j for j, q in enumerate(pairs_v) if q.key == key]
        for grid, (rr, ww) in enumerate(((r, w), (rh, wh))):
            ur, up = pair_gradients([pairs_u[i] for i in iu], rr)
            Rr, Rp = np.zeros((p, rr.size)), np.zeros((p, rr.size))
            Rr[iu], Rp[iu] = ur, up
            if jv and grid == 0:
                vr, vp = pair_gradients([pairs_v[j] for j in jv], rr)
                Rr -= C[:, jv] @ vr
                Rp -= C[:, jv] @ vp
            E += mode_factor(n) * (Rr @ (ww * Rr).T + n * n * (Rp @ (ww * Rp).T))
    return 0.5 * (E + E.T)


def eigenspace_gap(cfg: GeometryConfig, k: int, specG: Spectrum, specF: Spectrum) -> float:
    """S0(G) distance between the eigenspace of lambda_k^G and the matching F eigenspaces.

    ``k`` is 1-based.  F eigenfunctions are extended into the hole by their
    constant trace.  For spaces of equal dimension ||P_U - P_V|| is the
    largest distance from a unit vector of U to V, which is evaluated from
    the sampled residual fields.
    """
    IG = specG.group_of(k - 1)
    covered = set()
    for i in IG:
        covered.update(specF.group_of(i))
    if len(covered) != len(IG):
        raise GroupMismatch(f"k={k}: dim G group {len(IG)} != dim F groups {len(covered)}")
    IF = sorted(covered)
    U, V = [specG.pairs[i] for i in IG], [specF.pairs[j] for j in IF]
    r, w = fluid_grid(cfg, max(specG.N_r, specF.N_r))
    C = s0_cross_gram(U, V, r, w)
    E = residual_gram(U, V, C, cfg, r, w)
    return float(min(1.0, math.sqrt(max(0.0, float(np.linalg.eigvalsh(E).max())))))


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepRow:
    eps: float
    k: int
    lambda_eps: float
    lambda_G: float
    gap: float
    eigenspace_gap: float


def convergence_sweep(R_e: float, R_i: float, eps_list, k_max: int = 8, N_r: int = 48,
                      n_max: int = 12, strict: bool = False, specG: Spectrum | None = None):
    """Eigenvalue and eigenspace gaps along a list of hole radii (descending)."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly descending")
    if specG is None:
        specG = compute_spectrum(build_geometry(R_e, R_i, eps_list[-1], strict=False), DISK,
                                 k_max, N_r, n_max)
    rows = []
    for eps in eps_list:
        cfg = build_geometry(R_e, R_i, eps, strict=strict)
        specF = compute_spectrum(cfg, ANNULUS, k_max, N_r, n_max)
        for k in range(1, k_max + 1):
            lg, lf = specG.pairs[k - 1].lam, specF.pairs[k - 1].lam
            rows.append(SweepRow(eps, k, lf, lg, lf - lg, eigenspace_gap(cfg, k, specG, specF)))
    return rows


def audit_sweep(rows, lam_tol: float = 1e-7) -> dict:
    """Monotonicity (gap >= -tol*lambda) and non-increase of gaps along the sweep."""
    by_k = {}
    for row in rows:
        by_k.setdefault(row.k, []).append(row)
    checks = {}
    for k, rs in by_k.items():
        gaps = [x.gap for x in rs]
        nonneg = all(x.gap >= -lam_tol * x.lambda_G for x in rs)
        nonincr = all(b <= a + lam_tol * rs[0].lambda_G for a, b in zip(gaps, gaps[1:]))
        checks[k] = {"nonnegative": nonneg, "nonincreasing": nonincr, "gaps": gaps}
    return checks


def weyl_check(spec: Spectrum) -> dict:
    """Least-squares slope of lambda_m against m and the largest ratio lambda_m / m."""
    lam = spec.lams
    m = np.arange(1, lam.size + 1, dtype=float)
    if lam.size >= 2:
        slope = float(np.polyfit(m, lam, 1)[0])
    else:
        slope = float("nan")
    ratio = lam / m
    return {"slope": slope, "max_ratio": float(ratio.max()) if lam.size else float("nan"),
            "min_ratio": float(ratio.min()) if lam.size else float("nan"),
            "count": int(lam.size), "low_confidence": bool(lam.size < 20),
            "bounded": bool(lam.size and np.all(np.isfinite(ratio)))}
