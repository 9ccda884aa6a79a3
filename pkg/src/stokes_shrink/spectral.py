"""Per-mode radial Galerkin machinery for clamped stream functions.

A field of angular wavenumber n is written psi(r, phi) = f(r) T(n phi) with
T in {1, cos, sin}.  Angular integrals are done analytically, which leaves a
mode factor pi (n >= 1) or 2 pi (n = 0) in front of every radial integral.

Disk basis: f = r^n G(u), u = r^2, with G a recombination of Jacobi
polynomials P^(0,n) in y = 2u - 1 that vanishes with its first derivative
at y = 1.  The Jacobi weight matches the u^n factor of the Gram integrands.  All Gram
integrands are then polynomials in u.

Annulus basis: polynomials in xi = ln r + r / c mapped to x in [-1, 1].
Near the hole xi behaves like ln r, which turns boundary-layer profiles
r^-n into tame exponentials; near the outer wall it behaves like r / c,
which keeps high radial eigenfunctions resolved there.  Shen's biharmonic recombination vanishes with its derivative
at both ends; for n = 0 one cubic Hermite function carries the free constant
trace on the hole boundary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as leg
from scipy import linalg
from scipy.special import eval_jacobi, lambertw, poch

from .errors import (DegenerateTraceSystem, NotPositiveDefinite, ConvergenceFailure,
                     QuadratureFailure, SingularSystem, TruncationTooSmall)
from .geometry import GeometryConfig

DISK = "disk"
ANNULUS = "annulus"
PARITIES = ("radial", "cos", "sin")
STRETCH = 0.25  # c in the annulus coordinate xi = ln r + r / c


def mode_factor(n: int) -> float:
    """Angular integral of T(n phi)^2."""
    return 2.0 * math.pi if n == 0 else math.pi


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    x, w = leg.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def shen_biharmonic(N: int) -> np.ndarray:
    """Coefficients (N, N+4) of Legendre combinations with f(+-1) = f'(+-1) = 0."""
    C = np.zeros((N, N + 4))
    for j in range(N):
        C[j, j] = 1.0
        C[j, j + 2] = -2.0 * (2 * j + 5) / (2 * j + 7)
        C[j, j + 4] = (2 * j + 3) / (2 * j + 7)
    return C


def clamped_right(N: int, beta: float = 0.0) -> np.ndarray:
    """Coefficients (N, N+2) of P_j + a P_{j+1} + b P_{j+2} with g(1) = g'(1) = 0.

    P_k are Jacobi polynomials P_k^(0, beta), so P_k(1) = 1 for every beta.
    """
    C = np.zeros((N, N + 2))
    for j in range(N):
        d = lambda k: 0.5 * k * (k + beta + 1)  # P_k'(1)
        M = np.array([[1.0, 1.0], [d(j + 1), d(j + 2)]])
        a, b = np.linalg.solve(M, [-1.0, -d(j)])
        C[j, j], C[j, j + 1], C[j, j + 2] = 1.0, a, b
    return C


def _hermite_legendre() -> np.ndarray:
    # h(t) = (1 - t)^2 (1 + 2t), t = (x + 1)/2: h = 1, h' = 0 at x = -1; h = h' = 0 at x = 1
    t = np.polynomial.Polynomial([0.5, 0.5])
    h = (1 - t) ** 2 * (1 + 2 * t)
    return leg.poly2leg(h.coef)


def _derivative_tables(coef: np.ndarray, order: int = 3):
    tabs = [coef]
    for _ in range(order):
        tabs.append(leg.legder(tabs[-1], axis=1))
    return tabs


def _jacobi_rows(coef: np.ndarray, beta: float, x: np.ndarray, m: int) -> np.ndarray:
    k = np.arange(coef.shape[1])
    V = np.zeros((k.size, x.size))
    ok = k >= m
    kk = k[ok][:, None]
    V[ok] = poch(beta + kk + 1, m) / 2.0 ** m * eval_jacobi(kk - m, m, beta + m, x[None, :])
    return coef @ V


def _legval_rows(tab: np.ndarray, x: np.ndarray) -> np.ndarray:
    if tab.shape[1] == 0:
        return np.zeros((tab.shape[0], x.size))
    return tab @ leg.legvander(x, tab.shape[1] - 1).T


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Recombined radial basis for one angular wavenumber on one domain."""

    domain: str
    n: int
    N_r: int
    r_lo: float
    r_hi: float
    coef: np.ndarray
    quad_order: int
    _tabs: tuple = field(repr=False, default=())

    @property
    def size(self) -> int:
        return self.N_r

    def xi(self, r):
        """Annulus coordinate ln r + r / c."""
        return np.log(r) + np.asarray(r) / STRETCH

    @property
    def kappa(self) -> float:
        """d x / d xi for the annulus map."""
        return 2.0 / float(self.xi(self.r_hi) - self.xi(self.r_lo))

    def r_of_xi(self, xi):
        """Inverse of xi via the Lambert function, polished by one Newton step."""
        xi = np.asarray(xi, dtype=float)
        r = STRETCH * np.real(lambertw(np.exp(xi) / STRETCH))
        return r - (np.log(r) + r / STRETCH - xi) / (1.0 / r + 1.0 / STRETCH)

    def _mapped(self, r):
        r = np.asarray(r, dtype=float)
        if self.domain == DISK:
            return 2.0 * (r / self.r_hi) ** 2 - 1.0
        return self.kappa * (self.xi(r) - float(self.xi(self.r_lo))) - 1.0

    def mapped_derivatives(self, r, order: int = 3):
        """Derivatives in the natural variable: u = r^2 (disk) or xi (annulus)."""
        x = self._mapped(r)
        if self.domain == DISK:
            fac = 2.0 / self.r_hi ** 2
            return [fac ** k * _jacobi_rows(self.coef, self.n, x, k) for k in range(order + 1)]
        return [self.kappa ** k * _legval_rows(self._tabs[k], x) for k in range(order + 1)]

    def eval(self, r, d: int = 0) -> np.ndarray:
        """d-th radial derivative of every basis function, shape (N_r, len(r))."""
        return self.eval_all(r, d)[d]

    def eval_all(self, r, order: int = 3):
        """List of radial derivatives 0..order, each of shape (N_r, len(r))."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        n = self.n
        if self.domain == DISK:
            G = self.mapped_derivatives(r, order)
            g = [G[0]]
            if order >= 1:
                g.append(2 * r * G[1])
            if order >= 2:
                g.append(2 * G[1] + 4 * r ** 2 * G[2])
            if order >= 3:
                g.append(12 * r * G[2] + 8 * r ** 3 * G[3])
            p = []
            for k in range(order + 1):
                c = math.prod(range(n - k + 1, n + 1)) if k <= n else 0
                p.append(c * r ** (n - k) if c else np.zeros_like(r))
            return [sum(math.comb(d, k) * p[k] * g[d - k] for k in range(d + 1))
                    for d in range(order + 1)]
        F = self.mapped_derivatives(r, order)
        g, g1, g2 = 1.0 / r + 1.0 / STRETCH, -1.0 / r ** 2, 2.0 / r ** 3
        out = [F[0]]
        if order >= 1:
            out.append(F[1] * g)
        if order >= 2:
            out.append(F[2] * g ** 2 + F[1] * g1)
        if order >= 3:
            out.append(F[3] * g ** 3 + 3 * F[2] * g * g1 + F[1] * g2)
        return out

    def laplacian(self, r, d: int = 0) -> np.ndarray:
        """Mode-n Laplacian of each basis function (d=0) or its r-derivative (d=1)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        n = self.n
        if self.domain == DISK:
            G = self.mapped_derivatives(r, 3)
            u = r ** 2
            # L(r^n G(u)) = r^n (4 u G'' + 4 (n + 1) G')
            core = 4 * u * G[2] + 4 * (n + 1) * G[1]
            if d == 0:
                return r ** n * core
            dcore = 2 * r * (4 * G[2] + 4 * u * G[3] + 4 * (n + 1) * G[2])
            return (n * r ** (n - 1) * core if n else 0.0) + r ** n * dcore
        F = self.mapped_derivatives(r, 2 + d)
        c = STRETCH
        g = 1.0 / r + 1.0 / c
        # f'' + f'/r = F'' g^2 + F' / (r c), free of the 1/r^2 cancellation
        if d == 0:
            return F[2] * g ** 2 + F[1] / (r * c) - n * n * F[0] / r ** 2
        return (F[3] * g ** 3 - 2 * F[2] * g / r ** 2 + F[2] * g / (r * c) - F[1] / (r * r * c)
                - n * n * (F[1] * g / r ** 2 - 2 * F[0] / r ** 3))

    def quadrature(self, m: int | None = None):
        """Nodes r and weights for integrals of g(r) r dr over the domain."""
        m = self.quad_order if m is None else m
        x, w = gauss_legendre(m)
        if self.domain == DISK:
            u = 0.5 * (x + 1) * self.r_hi ** 2
            return np.sqrt(u), 0.25 * w * self.r_hi ** 2
        r = self.r_of_xi(float(self.xi(self.r_lo)) + (x + 1) / self.kappa)
        return r, w * r / (self.kappa * (1.0 / r + 1.0 / STRETCH))


def default_quad_order(domain: str, n: int, N_r: int, r_lo: float = 0.0) -> int:
    if domain == DISK:
        return N_r + n + 8
    return N_r + 28 + int(math.ceil(2 * abs(math.log(r_lo))))


def build_mode_basis(cfg: GeometryConfig | None, domain: str, n: int, N_r: int,
                     quad_order: int | None = None) -> ModeBasis:
    """Basis of dimension N_r satisfying the clamped boundary conditions."""
    if N_r < 4:
        raise TruncationTooSmall(f"N_r={N_r} < 4")
    if n < 0:
        raise ValueError("wavenumber must be nonnegative")
    R = 1.0 if cfg is None else cfg.R_e
    if domain == DISK:
        coef = clamped_right(N_r, float(n))
        r_lo = 0.0
    elif domain == ANNULUS:
        if cfg is None:
            raise ValueError("annulus basis needs a geometry")
        r_lo = cfg.eps_hole
        if n == 0:
            sh = shen_biharmonic(N_r - 1)
            coef = np.zeros((N_r, N_r + 3))
            herm = _hermite_legendre()
            coef[0, :herm.size] = herm
            coef[1:, :] = sh
        else:
            coef = shen_biharmonic(N_r)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    q = default_quad_order(domain, n, N_r, r_lo) if quad_order is None else int(quad_order)
    q = max(q, N_r + 8)
    coef.setflags(write=False)
    tabs = tuple(_derivative_tables(coef)) if domain == ANNULUS else ()
    return ModeBasis(domain, n, N_r, r_lo, R, coef, q, tabs)


@dataclass(frozen=True, eq=False)
class GramPair:
    """S1 and S0 Gram matrices, optionally with quadrature square-root factors.

    When present, A = MA^T MA and B = KB^T KB exactly in the quadrature sense;
    the eigensolver then never forms the (badly graded) products.
    """

    A: np.ndarray
    B: np.ndarray
    MA: np.ndarray | None = None
    KB: np.ndarray | None = None


def _factors(basis: ModeBasis, m: int | None = None):
    r, w = basis.quadrature(m)
    n = basis.n
    sw = np.sqrt(mode_factor(n) * w)
    lap = basis.laplacian(r)
    f0, f1 = basis.eval_all(r, 1)
    MA = (lap * sw).T
    KB = np.vstack([(f1 * sw).T, (n * f0 / r * sw).T]) if n else (f1 * sw).T
    return MA, KB


def _sym(X):
    return 0.5 * (X + X.T)


def assemble_gram(basis: ModeBasis, check: bool = True, rtol: float = 1e-10) -> GramPair:
    """S1/S0 Gram matrices by Gauss quadrature, verified against doubled order."""
    MA, KB = _factors(basis)
    A, B = _sym(MA.T @ MA), _sym(KB.T @ KB)
    if check:
        MA2, KB2 = _factors(basis, 2 * basis.quad_order)
        for X, X2 in ((A, _sym(MA2.T @ MA2)), (B, _sym(KB2.T @ KB2))):
            d = np.sqrt(np.abs(np.outer(np.diag(X2), np.diag(X2))))
            err = np.max(np.abs(X - X2) / d)
            if not err <= rtol:
                raise QuadratureFailure(
                    f"n={basis.n}: Gram entries moved by {err:.2e} under refinement")
    return GramPair(A, B, MA, KB)


def solve_gep(g: GramPair, k_max: int | None = None, tol: float = 1e-10):
    """Generalised symmetric eigenpairs of A x = lam B x, ascending.

    Returns (lam, X) with B-orthonormal columns.  With square-root factors
    the pencil is solved as a singular value problem of KB R^{-1}, where
    MA P = Q R is a pivoted QR with rows sorted by size; this keeps the
    low eigenvalues accurate when the S1 weight spans many decades.
    """
    A, B = np.asarray(g.A, float), np.asarray(g.B, float)
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    N = A.shape[0]
    k = N if k_max is None else min(int(k_max), N)
    if g.MA is not None and g.KB is not None:
        MA = g.MA[np.argsort(-np.linalg.norm(g.MA, axis=1), kind="stable")]
        _, R, piv = linalg.qr(MA, mode="economic", pivoting=True)
        if np.min(np.abs(np.diag(R))) <= 1e-300:
            raise SingularSystem("S1 factor is rank deficient")
        Gm = linalg.solve_triangular(R, g.KB[:, piv].T, trans="T").T
        _, sig, Vt = np.linalg.svd(Gm, full_matrices=False)
        lam = 1.0 / sig[:k] ** 2
        Xp = linalg.solve_triangular(R, Vt[:k].T / sig[:k])
        X = np.empty_like(Xp)
        X[piv] = Xp
    else:
        lam, X = linalg.eigh(A, B, subset_by_index=[0, k - 1])
    X = X * np.where(X[np.argmax(np.abs(X), axis=0), np.arange(X.shape[1])] < 0, -1.0, 1.0)
    res = np.linalg.norm(A @ X - B @ X * lam, axis=0)
    scale = np.linalg.norm(A, 2) * np.linalg.norm(X, axis=0)
    # the factored solve is forward accurate at the bottom of the spectrum;
    # one inverse-iteration sweep restores a small backward residual at the top
    for j in np.flatnonzero(res > 0.1 * tol * scale):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            y = linalg.solve(A - lam[j] * B, B @ X[:, j], assume_a="sym")
        y /= math.sqrt(y @ B @ y)
        y *= np.sign(y @ B @ X[:, j])
        X[:, j], lam[j] = y, y @ A @ y
        res[j] = np.linalg.norm(A @ y - lam[j] * (B @ y))
        scale[j] = np.linalg.norm(A, 2) * np.linalg.norm(y)
    if not np.all(res <= tol * scale):
        raise ConvergenceFailure(f"max relative residual {np.max(res / scale):.2e}")
    return lam, X


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial part of one Fourier component of a scalar field.

    ``func(r, d)`` returns the d-th radial derivative (d = 0..3 where
    available).  Profiles built from a basis also keep the coefficients.
    """

    n: int
    parity: str
    func: Callable[[np.ndarray, int], np.ndarray]
    basis: ModeBasis | None = None
    coeffs: np.ndarray | None = None

    def __call__(self, r, d: int = 0) -> np.ndarray:
        return self.func(np.atleast_1d(np.asarray(r, dtype=float)), d)

    @classmethod
    def from_basis(cls, basis: ModeBasis, coeffs, parity: str | None = None):
        c = np.asarray(coeffs, dtype=float)
        par = parity or ("radial" if basis.n == 0 else "cos")
        return cls(basis.n, par, lambda r, d: c @ basis.eval_all(r, d)[d], basis, c)

    @classmethod
    def power(cls, n: int, p: float, scale: float = 1.0, coef: float = 1.0,
              parity: str | None = None):
        """coef * (r/scale)^p with exact derivatives."""
        par = parity or ("radial" if n == 0 else "cos")

        def f(r, d):
            c = coef * math.prod(p - i for i in range(d)) / scale ** d
            return c * (r / scale) ** (p - d) if c else np.zeros_like(r)
        return cls(n, par, f)

    def laplacian(self, r, d: int = 0):
        """Mode-n Laplacian (d=0) or its radial derivative (d=1), generic formula."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.basis is not None:
            return self.coeffs @ self.basis.laplacian(r, d)
        n = self.n
        f0, f1, f2 = self(r, 0), self(r, 1), self(r, 2)
        if d == 0:
            return f2 + f1 / r - n * n * f0 / r ** 2
        f3 = self(r, 3)
        return f3 + f2 / r - f1 / r ** 2 - n * n * f1 / r ** 2 + 2 * n * n * f0 / r ** 3

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        if (self.n, self.parity) != (other.n, other.parity):
            raise ValueError("cannot add profiles of different modes")
        return RadialProfile(self.n, self.parity, lambda r, d: self.func(r, d) + other.func(r, d))

    def __sub__(self, other: "RadialProfile") -> "RadialProfile":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "RadialProfile":
        coeffs = None if self.coeffs is None else c * self.coeffs
        return RadialProfile(self.n, self.parity, lambda r, d: c * self.func(r, d),
                             self.basis, coeffs)


# --------------------------------------------------------------- quadrature

def disk_grid(m: int, R: float = 1.0):
    """Gauss nodes in u = r^2 on (0, R); weights for g r dr."""
    x, w = gauss_legendre(m)
    u = 0.5 * (x + 1) * R * R
    return np.sqrt(u), 0.25 * w * R * R


def log_grid(r_lo: float, r_hi: float, m: int = 24, panel: float = 1.0, breaks=()):
    """Composite Gauss rule in s = ln r on (r_lo, r_hi); weights for g r dr.

    Panels are at most ``panel`` long in s; ``breaks`` adds extra panel edges.
    """
    s_lo, s_hi = math.log(r_lo), math.log(r_hi)
    edges = {s_lo, s_hi}
    edges.update(math.log(b) for b in breaks if r_lo < b < r_hi)
    edges = sorted(edges)
    fine = []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil((b - a) / panel)))
        fine.extend(a + (b - a) * np.arange(k) / k)
    fine.append(s_hi)
    x, w = gauss_legendre(m)
    rs, ws = [], []
    for a, b in zip(fine[:-1], fine[1:]):
        s = a + 0.5 * (b - a) * (x + 1)
        rs.append(np.exp(s))
        ws.append(0.5 * (b - a) * w * np.exp(2 * s))
    return np.concatenate(rs), np.concatenate(ws)


def hole_grid(eps: float, m: int = 24):
    """Gauss nodes in r on (0, eps); weights for g r dr."""
    x, w = gauss_legendre(m)
    r = 0.5 * eps * (x + 1)
    return r, 0.5 * eps * w * r


def domain_grid(cfg: GeometryConfig | None, domain: str, m: int = 96):
    if domain == DISK:
        return disk_grid(m, 1.0 if cfg is None else cfg.R_e)
    return log_grid(cfg.eps_hole, cfg.R_e, m=max(24, m // 4))


def s0_inner(p: RadialProfile, q: RadialProfile, r, w) -> float:
    """Mode-wise S0 (Dirichlet) inner product on a quadrature grid."""
    if (p.n, p.parity) != (q.n, q.parity):
        return 0.0
    n = p.n
    val = p(r, 1) * q(r, 1) + (n * n * p(r, 0) * q(r, 0) / r ** 2 if n else 0.0)
    return mode_factor(n) * float(np.dot(w, val))


def l2_inner(p, q, r, w, n: int) -> float:
    return mode_factor(n) * float(np.dot(w, p * q))


# ------------------------------------------------------ Biot-Savart, P, Q

def biot_savart(basis: ModeBasis, omega: RadialProfile, parity: str | None = None) -> RadialProfile:
    """Galerkin stream function with (Lap psi, Lap theta) = (omega, Lap theta)."""
    if omega.n != basis.n:
        raise ValueError("mode mismatch")
    r, w = basis.quadrature()
    sw = np.sqrt(mode_factor(basis.n) * w)
    MA = (basis.laplacian(r) * sw).T
    rhs = omega(r) * sw
    coeffs, _, rank, _ = np.linalg.lstsq(MA, rhs, rcond=None)
    if rank < basis.N_r:
        raise SingularSystem(f"rank {rank} < {basis.N_r}")
    return RadialProfile.from_basis(basis, coeffs, parity or omega.parity)


def harmonic_profiles(cfg: GeometryConfig | None, domain: str, n: int, parity: str):
    """Scaled mode-n harmonic span: r^n on the disk; r^n, r^-n (n>=1) or 1 on the annulus."""
    R = 1.0 if cfg is None else cfg.R_e
    if domain == DISK or n == 0:
        return [RadialProfile.power(n, n, R, parity=parity)]
    e = cfg.eps_hole
    return [RadialProfile.power(n, n, R, parity=parity),
            RadialProfile.power(n, -n, 1.0, coef=e ** n, parity=parity)]


def project_V0(cfg: GeometryConfig | None, domain: str, f: RadialProfile,
               grid=None) -> RadialProfile:
    """Remove the L2(r dr) projection of f onto the mode-n harmonic span."""
    r, w = grid if grid is not None else domain_grid(cfg, domain)
    hs = harmonic_profiles(cfg, domain, f.n, f.parity)
    H = np.stack([h(r) for h in hs], axis=1) * np.sqrt(w)[:, None]
    c, *_ = np.linalg.lstsq(H, f(r) * np.sqrt(w), rcond=None)
    out = f
    for ci, h in zip(c, hs):
        out = out - h.scaled(ci)
    return out


@dataclass(frozen=True)
class HarmonicPart:
    """h = alpha (r/R)^n + beta (eps/r)^n for n >= 1, or the constant alpha for n = 0."""

    n: int
    alpha: float
    beta: float = 0.0


def project_S0(cfg: GeometryConfig | None, domain: str, psi: RadialProfile):
    """Split psi = Q psi + h with h harmonic and Q psi in S0 of the domain.

    Traces are matched at r = R_e (and at r = eps on the annulus for n >= 1);
    for n = 0 only the outer trace matters because S0 allows a constant
    trace on the hole boundary.
    """
    R = 1.0 if cfg is None else cfg.R_e
    n = psi.n
    outer = float(psi(R)[0])
    if domain == DISK or n == 0:
        part = HarmonicPart(n, outer)
        h = RadialProfile.power(n, n, R, coef=outer, parity=psi.parity)
    else:
        e = cfg.eps_hole
        q = (e / R) ** n
        M = np.array([[1.0, q], [q, 1.0]])
        if abs(1 - q * q) < 1e-15:
            raise DegenerateTraceSystem("hole radius equals outer radius")
        alpha, beta = np.linalg.solve(M, [outer, float(psi(e)[0])])
        part = HarmonicPart(n, alpha, beta)
        h = (RadialProfile.power(n, n, R, coef=alpha, parity=psi.parity)
             + RadialProfile.power(n, -n, 1.0, coef=beta * e ** n, parity=psi.parity))
    return psi - h, part


# ------------------------------------------------------------ modal fields

def s0_norm_sq(field: dict, r, w) -> float:
    """Sum over components of the mode-wise Dirichlet energy on a grid."""
    return sum(s0_inner(p, p, r, w) for p in field.values())


def random_field(rng: np.random.Generator, n_max: int = 4, n_radial: int = 6) -> dict:
    """Seeded S0(G) test field: random clamped disk polynomials in modes 0..n_max.

    Radial coefficients decay like 1/(j+1) and every component is normalised
    to unit Dirichlet energy before a random O(1) amplitude is applied.
    """
    field = {}
    r, w = disk_grid(2 * n_radial + n_max + 16)
    for n in range(n_max + 1):
        basis = build_mode_basis(None, DISK, n, max(4, n_radial))
        for par in (("radial",) if n == 0 else ("cos", "sin")):
            c = rng.standard_normal(basis.N_r) / (1.0 + np.arange(basis.N_r))
            p = RadialProfile.from_basis(basis, c, par)
            p = p.scaled(rng.standard_normal() / math.sqrt(s0_inner(p, p, r, w)))
            field[(n, par)] = p
    return field
