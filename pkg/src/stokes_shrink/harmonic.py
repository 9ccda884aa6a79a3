"""Polar-series harmonic functions on the concentric geometry.

Closed-form region norms, concentration ratios, the projection onto
restrictions of disk harmonics, the transmission operator and the
four-way orthogonal splitting of a vorticity field.  Every power integral
is evaluated in log space so that tiny holes and high modes neither
overflow nor underflow before a ratio is formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng
from .errors import NotInV0, RegionOutsideDomain, ZeroFunction
from .geometry import GeometryConfig, Region, region_bounds
from .spectral import (DISK, RadialProfile, build_mode_basis, disk_grid, hole_grid, log_grid,
                       mode_factor, random_field)

AUDIT_MARGIN = 1e-9
V0_RTOL = 1e-9
DEFAULT_MODES = 64


# ------------------------------------------------------------ power integrals

def log_power_integral(q: float, lo: float, hi: float) -> float:
    """log of int_lo^hi x^q dx for 0 <= lo < hi <= inf (finite cases only)."""
    if not lo < hi:
        return -math.inf
    s = q + 1.0
    if s == 0.0:
        if lo == 0.0 or math.isinf(hi):
            return math.inf
        return math.log(math.log(hi) - math.log(lo))
    if s > 0.0:
        if math.isinf(hi):
            return math.inf
        if lo == 0.0:
            return s * math.log(hi) - math.log(s)
        return s * math.log(hi) + math.log(-math.expm1(s * (math.log(lo) - math.log(hi)))) - math.log(s)
    t = -s
    if lo == 0.0:
        return math.inf
    if math.isinf(hi):
        return -t * math.log(lo) - math.log(t)
    return -t * math.log(lo) + math.log(-math.expm1(-t * (math.log(hi) - math.log(lo)))) - math.log(t)


def _region(cfg_or_region, tag=None) -> Region:
    if isinstance(cfg_or_region, Region):
        return cfg_or_region
    return region_bounds(cfg_or_region, tag)


# ----------------------------------------------------------------- expansions

@dataclass(frozen=True, eq=False)
class HarmonicExpansion:
    """Truncated polar series of a harmonic function.

    interior: a_0 + sum_n (r/rho)^n (a_n cos n theta + b_n sin n theta)
    exterior: sum_k (rho/r)^k (a_k cos k theta + b_k sin k theta), k >= 1

    ``a`` and ``b`` are indexed by the mode number; for exterior series
    a[0] must vanish, and b[0] always does.  ``support`` is the radial
    interval on which the series represents the function.
    """

    kind: str
    a: np.ndarray
    b: np.ndarray
    rho: float = 1.0
    support: tuple = (0.0, math.inf)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if self.kind not in ("interior", "exterior"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if a.shape != b.shape or a.ndim != 1 or a.size < 2:
            raise ValueError("a and b must be 1-d arrays of equal length >= 2 (N_modes >= 1)")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        if b[0] != 0.0:
            raise ValueError("b[0] must be zero")
        if self.kind == "exterior" and a[0] != 0.0:
            raise ValueError("exterior series carry no constant term")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def N_modes(self) -> int:
        return self.a.size - 1

    @property
    def sign(self) -> int:
        return 1 if self.kind == "interior" else -1

    def mode_weights(self) -> np.ndarray:
        """a_n^2 + b_n^2 per mode."""
        return self.a ** 2 + self.b ** 2

    def check_region(self, region: Region):
        lo, hi = self.support
        if region.r_lo < lo * (1 - 1e-14) or region.r_hi > hi * (1 + 1e-14):
            raise RegionOutsideDomain(
                f"region {region.tag} ({region.r_lo:g}, {region.r_hi:g}) outside ({lo:g}, {hi:g})")
        if self.kind == "exterior" and region.r_lo <= 0.0:
            raise RegionOutsideDomain("exterior series are singular at the origin")

    def profile(self, n: int, parity: str = "cos") -> RadialProfile:
        c = self.a[n] if parity in ("cos", "radial") else self.b[n]
        return RadialProfile.power(n, self.sign * n, self.rho, coef=float(c), parity=parity)

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast(r, theta).shape)
        for n in range(self.N_modes + 1):
            if self.a[n] == 0.0 and self.b[n] == 0.0:
                continue
            rad = (r / self.rho) ** (self.sign * n)
            out = out + rad * (self.a[n] * np.cos(n * theta) + self.b[n] * np.sin(n * theta))
        return out

    @classmethod
    def interior(cls, a, b=None, rho: float = 1.0, support=(0.0, math.inf)):
        a = np.asarray(a, dtype=float)
        return cls("interior", a, np.zeros_like(a) if b is None else b, rho, support)

    @classmethod
    def exterior(cls, a, b=None, rho: float = 1.0, support=(0.0, math.inf)):
        a = np.asarray(a, dtype=float)
        return cls("exterior", a, np.zeros_like(a) if b is None else b, rho, support)


def _log_terms(h: HarmonicExpansion, region: Region, gradient: bool) -> np.ndarray:
    """log of each mode's contribution to the L2 (or Dirichlet) norm on a region."""
    lo, hi = region.r_lo / h.rho, region.r_hi / h.rho
    wts = h.mode_weights()
    out = np.full(wts.size, -math.inf)
    for n in range(wts.size):
        if wts[n] == 0.0 or (gradient and n == 0):
            continue
        p = h.sign * n
        if gradient:
            # |grad (x^p cos)|^2 integrates over theta to pi (p^2 + n^2) x^(2p-2)
            out[n] = math.log(2 * math.pi * n * n) + log_power_integral(2 * p - 1, lo, hi)
        else:
            out[n] = (math.log(mode_factor(n)) + 2 * math.log(h.rho)
                      + log_power_integral(2 * p + 1, lo, hi))
        out[n] += math.log(wts[n])
    return out


def log_l2_norm_sq(h: HarmonicExpansion, region: Region) -> float:
    h.check_region(region)
    return float(logsumexp(_log_terms(h, region, False)))


def log_dirichlet_energy(h: HarmonicExpansion, region: Region) -> float:
    h.check_region(region)
    return float(logsumexp(_log_terms(h, region, True)))


def l2_norm_sq(h: HarmonicExpansion, region: Region) -> float:
    """Closed-form integral of h^2 over an annular region (mode-wise sum)."""
    return math.exp(log_l2_norm_sq(h, region))


def dirichlet_energy(h: HarmonicExpansion, region: Region) -> float:
    """Closed-form integral of |grad h|^2 over an annular region."""
    return math.exp(log_dirichlet_energy(h, region))


def _ratio(h, num: Region, den: Region, gradient: bool = False) -> float:
    f = log_dirichlet_energy if gradient else log_l2_norm_sq
    d = f(h, den)
    if d == -math.inf:
        raise ZeroFunction("function vanishes on the reference region")
    return math.exp(0.5 * (f(h, num) - d))


def geometric_tail_bound(A: float, q: float, N: int, region: Region, kind: str,
                         rho: float = 1.0) -> float:
    """Upper bound on the L2 mass of modes n > N when |a_n|, |b_n| <= A q^n.

    Returns inf when the geometric series diverges on the region.
    """
    if kind == "interior":
        x = region.r_hi / rho
        z = (q * x) ** 2
        if z >= 1.0:
            return math.inf
        return 2 * math.pi * A * A * rho ** 2 * x * x * z ** (N + 1) / ((2 * N + 4) * (1 - z))
    y = region.r_lo / rho
    if y <= 0.0:
        return math.inf
    z = (q / y) ** 2
    if z >= 1.0:
        return math.inf
    return 2 * math.pi * A * A * rho ** 2 * y * y * z ** (N + 1) / (2 * max(N, 1) * (1 - z))


def tail_estimate(h: HarmonicExpansion, region: Region) -> float:
    """Tail bound for continuing the trailing coefficients geometrically.

    A geometric envelope A q^n is fitted to the upper half of the modes and
    raised until it dominates them; the bound is the mass such an envelope
    would put beyond the truncation.
    """
    n = np.arange(h.N_modes + 1)
    mag = np.maximum(np.abs(h.a), np.abs(h.b))
    sel = (n >= max(1, h.N_modes // 2)) & (mag > 0)
    if sel.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(n[sel], np.log(mag[sel]), 1)
    q = float(min(math.exp(slope), 1.0))
    A = float(np.max(mag[sel] / q ** n[sel]))
    return geometric_tail_bound(A, q, h.N_modes, region, h.kind, h.rho)


# --------------------------------------------------------------------- audits

def _entry(value, bound, upper=True, margin=AUDIT_MARGIN):
    m = (bound - value) if upper else (value - bound)
    return {"value": float(value), "bound": float(bound), "margin": float(m),
            "pass": bool(m >= -margin)}


def trap_bound(cfg: GeometryConfig) -> float:
    return math.sqrt(cfg.R_minus ** 2 / (cfg.R_i ** 2 - cfg.R_minus ** 2))


def interior_trap_audit(cfg: GeometryConfig, N_modes: int = DEFAULT_MODES) -> dict:
    """Per-mode ratio ||h||_{D-} / ||h||_{Ci} for interior harmonics.

    The ratio of a single mode does not depend on its coefficients, and a
    mixture is a sum of orthogonal mode contributions, so its ratio never
    exceeds the largest per-mode value.
    """
    q = np.array([(2 * n + 2) * math.log(cfg.R_minus / cfg.R_i) for n in range(N_modes + 1)])
    log_ratios = 0.5 * (q - np.log(-np.expm1(q)))
    ratios = np.exp(log_ratios)
    bound = trap_bound(cfg)
    e = _entry(float(ratios.max()), bound)
    return {"ratios": ratios, "sup": e["value"], "bound": bound, "margin": e["margin"],
            "pass": e["pass"], "decreasing": bool(np.all(np.diff(log_ratios) < 0))}


def exterior_concentration_audit(cfg: GeometryConfig, h: HarmonicExpansion) -> dict:
    """Mass concentration of a decaying exterior harmonic in the boundary layer."""
    if h.kind != "exterior":
        raise ValueError("exterior expansion required")
    F, FS, FG = (region_bounds(cfg, t) for t in ("F", "FSigma", "FGamma"))
    if np.all(h.mode_weights() == 0.0):
        raise ZeroFunction("zero expansion")
    d, rm, rp = cfg.delta, cfg.R_minus, cfg.R_plus
    outside = Region("ext", cfg.R_e, math.inf)
    out = {
        "l2_FSigma": _entry(_ratio(h, FS, F), math.sqrt(1 - 1 / d), upper=False),
        "l2_FGamma": _entry(_ratio(h, FG, F), math.sqrt(1 / d)),
        "h1_FSigma": _entry(_ratio(h, FS, F, True), math.sqrt(1 - (rm / rp) ** 2), upper=False),
        "h1_FGamma": _entry(_ratio(h, FG, F, True), rm / rp),
        "h1_outside": _entry(_ratio(h, outside, F, True), trap_bound(cfg)),
    }
    out["pass"] = all(v["pass"] for v in out.values())
    out["tail"] = tail_estimate(h, F)
    return out


def interior_concentration_audit(cfg: GeometryConfig, h: HarmonicExpansion) -> dict:
    """Disk harmonics restricted to F stay away from the boundary layer."""
    F, FS, FG, O = (region_bounds(cfg, t) for t in ("F", "FSigma", "FGamma", "O"))
    rm, rp, ri = cfg.R_minus, cfg.R_plus, cfg.R_i
    out = {
        "l2_hole": _entry(_ratio(h, O, F), trap_bound(cfg)),
        "l2_FSigma": _entry(_ratio(h, FS, F), math.sqrt(rp ** 2 / (ri ** 2 - rm ** 2))),
        "l2_FGamma": _entry(_ratio(h, FG, F), math.sqrt((ri ** 2 - rm ** 2 - rp ** 2) / (ri ** 2 - rm ** 2)),
                            upper=False),
        "h1_FSigma_l2": _entry(_ratio(h, FS, F), math.sqrt(rp ** 2 / (ri ** 2 - rp ** 2))),
    }
    out["pass"] = all(v["pass"] for v in out.values())
    out["tail"] = tail_estimate(h, F)
    return out


def _log_cross(n: int, rho_a: float, pa: int, rho_b: float, pb: int, lo: float, hi: float) -> float:
    """log of int_lo^hi (r/rho_a)^pa (r/rho_b)^pb r dr (always positive)."""
    return -pa * math.log(rho_a) - pb * math.log(rho_b) + log_power_integral(pa + pb + 1, lo, hi)


@dataclass(frozen=True, eq=False)
class Projection:
    image: HarmonicExpansion
    ratio: float
    bound: float
    margin: float
    passed: bool
    residual: float


def project_HG(cfg: GeometryConfig, h_K: HarmonicExpansion) -> Projection:
    """L2(F)-orthogonal projection of an exterior harmonic onto restrictions of disk harmonics.

    Mode by mode the target is span{r^n}; exterior series have no mode 0,
    so the image has none either.  The image is expressed in (r/R_e)^n.
    """
    if h_K.kind != "exterior":
        raise ValueError("exterior expansion required")
    if np.all(h_K.mode_weights() == 0.0):
        raise ZeroFunction("zero expansion")
    e, R = cfg.eps_hole, cfg.R_e
    F = region_bounds(cfg, "F")
    N = h_K.N_modes
    coef = np.zeros(N + 1)
    for n in range(1, N + 1):
        # <(rho/r)^n, (r/R)^n> / ||(r/R)^n||^2 on (eps, R)
        coef[n] = math.exp(_log_cross(n, h_K.rho, -n, R, n, e, R) - _log_cross(n, R, n, R, n, e, R))
    img = HarmonicExpansion.interior(coef * h_K.a, coef * h_K.b, rho=R, support=(0.0, R))
    # projection residual: <h_K - P h_K, (r/R)^n>_F relative to the norms involved
    res = 0.0
    for n in range(1, N + 1):
        lhs = math.exp(_log_cross(n, h_K.rho, -n, R, n, e, R))
        rhs = coef[n] * math.exp(_log_cross(n, R, n, R, n, e, R))
        scale = math.sqrt(math.exp(_log_cross(n, h_K.rho, -n, h_K.rho, -n, e, R)
                                   + _log_cross(n, R, n, R, n, e, R)))
        res = max(res, abs(lhs - rhs) / scale)
    ratio = math.exp(0.5 * (log_l2_norm_sq(img, F) - log_l2_norm_sq(h_K, F)))
    bound = 2 * math.sqrt(cfg.delta0 / cfg.delta)
    ent = _entry(ratio, bound)
    return Projection(img, ratio, bound, ent["margin"], ent["pass"], res)


def transmission_T(cfg: GeometryConfig, h_O: HarmonicExpansion) -> Projection:
    """Disk harmonic on F completing a hole harmonic to a function of V0(G).

    Per mode, alpha (r/rho)^n on the hole and beta (r/R_e)^n on the fluid
    are orthogonal over the whole disk to (r/R_e)^n.
    """
    if h_O.kind != "interior":
        raise ValueError("interior expansion on the hole required")
    e, R = cfg.eps_hole, cfg.R_e
    N = h_O.N_modes
    coef = np.zeros(N + 1)
    res = 0.0
    for n in range(N + 1):
        lin = _log_cross(n, h_O.rho, n, R, n, 0.0, e)
        lout = _log_cross(n, R, n, R, n, e, R)
        coef[n] = -math.exp(lin - lout)
        scale = math.exp(0.5 * (_log_cross(n, h_O.rho, n, h_O.rho, n, 0.0, e) + lout))
        res = max(res, abs(math.exp(lin) + coef[n] * math.exp(lout)) / scale)
    img = HarmonicExpansion.interior(coef * h_O.a, coef * h_O.b, rho=R, support=(0.0, R))
    wts = h_O.mode_weights()
    if np.all(wts == 0.0):
        return Projection(img, 0.0, trap_bound(cfg), trap_bound(cfg), True, res)
    ratio = math.exp(0.5 * (log_l2_norm_sq(img, region_bounds(cfg, "F"))
                            - log_l2_norm_sq(h_O, region_bounds(cfg, "O"))))
    bound = trap_bound(cfg)
    ent = _entry(ratio, bound)
    return Projection(img, ratio, bound, ent["margin"], ent["pass"], res)


# ------------------------------------------------------ vorticity splitting

@dataclass(frozen=True)
class ModeSplit:
    """Coefficients of the splitting of one Fourier component.

    hole harmonic part alpha (r/eps)^n, its transmitted image beta (r/R)^n,
    and the H0(F) part gamma ((eps/r)^n - c (r/R)^n) (n >= 1 only).
    """

    n: int
    parity: str
    alpha: float
    beta: float
    gamma: float
    c: float


@dataclass(frozen=True, eq=False)
class VorticityDecomposition:
    cfg: GeometryConfig
    omega: dict = field(repr=False)
    splits: dict = field(repr=False)
    norms: dict = field(default_factory=dict)
    orthogonality: dict = field(default_factory=dict)
    pythagoras: float = 0.0
    v0_fluid: float = 0.0
    farfield: dict | None = None

    def part(self, name: str, key, r) -> np.ndarray:
        """Radial profile of one part ('F', 'O', 'H', 'W') of component ``key``."""
        r = np.asarray(r, float)
        return _part(self.cfg, self.splits[key], self.omega[key](r), name, r)

    @property
    def hole_harmonic(self) -> HarmonicExpansion:
        return _splits_expansion(self.splits, "alpha", self.cfg.eps_hole, (0.0, self.cfg.eps_hole))

    @property
    def transmitted(self) -> HarmonicExpansion:
        return _splits_expansion(self.splits, "beta", self.cfg.R_e, (0.0, self.cfg.R_e))


def _splits_expansion(splits, attr, rho, support):
    N = max((k[0] for k in splits), default=1)
    a, b = np.zeros(max(N, 1) + 1), np.zeros(max(N, 1) + 1)
    for (n, par), s in splits.items():
        (b if par == "sin" else a)[n] = getattr(s, attr)
    return HarmonicExpansion.interior(a, b, rho=rho, support=support)


def _part(cfg, s: ModeSplit, fr: np.ndarray, name: str, r: np.ndarray) -> np.ndarray:
    e, R, n = cfg.eps_hole, cfg.R_e, s.n
    hole = r < e
    rr = np.where(r > 0, r, 1.0)
    pO = np.where(hole, (r / e) ** n, 0.0)
    pG = (r / R) ** n
    h0 = (e / rr) ** n - s.c * pG if n else np.zeros_like(r)
    if name == "W":
        return np.where(hole, s.alpha * pO, s.beta * pG)
    if name == "O":
        return np.where(hole, fr - s.alpha * pO, 0.0)
    if name == "H":
        return np.where(hole, 0.0, s.gamma * h0)
    if name == "F":
        return np.where(hole, 0.0, fr - s.beta * pG - s.gamma * h0)
    raise ValueError(f"unknown part {name!r}")


def split_grid(cfg: GeometryConfig, m: int = 32, panel: float = 1.0):
    """Quadrature on (0, eps) and on (eps, R_e) with panel edges at R_plus and R_i."""
    rh, wh = hole_grid(cfg.eps_hole, m)
    rf, wf = log_grid(cfg.eps_hole, cfg.R_e, m=m, panel=panel, breaks=(cfg.R_plus, cfg.R_i))
    return (rh, wh), (rf, wf)


def decompose_vorticity(cfg: GeometryConfig, omega: dict, m: int = 32, panel: float = 1.0,
                        v0_rtol: float = V0_RTOL) -> VorticityDecomposition:
    """Orthogonal splitting omega = omega_F + omega_O + omega_H + omega_W.

    ``omega`` maps (n, parity) to radial profiles on the whole disk and must
    lie in V0(G).  The hole restriction is split into its V0(O) part and its
    harmonic part; the harmonic part is completed on F by the transmission
    operator; the fluid remainder is split into V0(F) and H0(F) parts.
    Orthogonality and Pythagoras residuals are relative to ||omega||^2.
    """
    e, R = cfg.eps_hole, cfg.R_e
    (rh, wh), (rf, wf) = split_grid(cfg, m, panel)
    r_all, w_all = np.concatenate([rh, rf]), np.concatenate([wh, wf])
    splits, values, total = {}, {}, 0.0
    for key, f in omega.items():
        n = key[0]
        # profiles can be costly to evaluate, so sample each one once
        fa = values[key] = f(r_all)
        fo, ff = fa[:rh.size], fa[rh.size:]
        pG_all = (r_all / R) ** n
        nf = float(np.dot(w_all, fa * fa))
        total += mode_factor(n) * nf
        ip = float(np.dot(w_all, fa * pG_all))
        scale = math.sqrt(nf * float(np.dot(w_all, pG_all ** 2)))
        if scale > 0 and abs(ip) > v0_rtol * scale:
            raise NotInV0(f"component {key}: |(omega, r^n)| / norms = {abs(ip) / scale:.3e}")
        pO = (rh / e) ** n
        alpha = float(np.dot(wh, fo * pO)) * (2 * n + 2) / (e * e)
        q2 = (e / R) ** (2 * n + 2)
        beta = -alpha * (e / R) ** (n + 2) / (1.0 - q2)
        gamma = c = 0.0
        if n:
            c = (e / R) ** n * (1.0 - (e / R) ** 2) * (n + 1) / (1.0 - q2)
            h0 = (e / rf) ** n - c * (rf / R) ** n
            rem = ff - beta * (rf / R) ** n
            nh0 = float(np.dot(wf, h0 * h0))
            gamma = float(np.dot(wf, rem * h0)) / nh0
        splits[key] = ModeSplit(n, key[1], alpha, beta, gamma, c)
    if total == 0.0:
        raise ZeroFunction("zero vorticity")
    names = ("F", "O", "H", "W")
    samples = {k: {p: _part(cfg, s, values[k], p, r_all) for p in names} for k, s in splits.items()}

    def inner(a, b, sel=None):
        tot = 0.0
        for k, smp in samples.items():
            w = w_all if sel is None else w_all * sel
            tot += mode_factor(k[0]) * float(np.dot(w, smp[a] * smp[b]))
        return tot

    norms = {p: math.sqrt(max(inner(p, p), 0.0)) for p in names}
    norms["omega"] = math.sqrt(total)
    fluid = r_all >= e
    norms["omega_F_region"] = math.sqrt(max(sum(
        mode_factor(k[0]) * float(np.dot(w_all * fluid, values[k] ** 2)) for k in splits), 0.0))
    orth = {f"{a}{b}": abs(inner(a, b)) / total
            for i, a in enumerate(names) for b in names[i + 1:]}
    pyth = abs(total - sum(norms[p] ** 2 for p in names)) / total
    # omega_F must be orthogonal to every fluid harmonic of its mode
    v0f = 0.0
    for k, s in splits.items():
        n = k[0]
        hs = [(rf / R) ** n] + ([(e / rf) ** n] if n else [])
        wF = samples[k]["F"][rh.size:]
        for h in hs:
            d = math.sqrt(float(np.dot(wf, h * h)) * total)
            v0f = max(v0f, abs(float(np.dot(wf, wF * h))) / d)
    far = None
    if cfg.delta > 4 * cfg.delta0:
        sel = (r_all >= cfg.R_plus).astype(float)
        diff = 0.0
        for k, smp in samples.items():
            d = smp["H"] + smp["W"] + smp["O"]
            diff += mode_factor(k[0]) * float(np.dot(w_all * sel, d * d))
        bound = math.sqrt(2 * cfg.delta0 / (cfg.delta - 4 * cfg.delta0)) * norms["omega_F_region"]
        far = _entry(math.sqrt(diff), bound)
    return VorticityDecomposition(cfg, dict(omega), splits, norms, orth, pyth, v0f, far)


def vorticity_of(psi: dict) -> dict:
    """Componentwise Laplacian of a stream-function field."""
    return {k: RadialProfile(p.n, p.parity, lambda r, d, p=p: p.laplacian(r, d)) for k, p in psi.items()}


def random_vorticity(seed: int, counter: int = 0, n_max: int = 4, n_radial: int = 6) -> dict:
    """Laplacian of a seeded clamped disk field, hence an element of V0(G)."""
    return vorticity_of(random_field(_rng.stream(seed, "vorticity", counter), n_max, n_radial))


# -------------------------------------------------------- far-field residual

def q_farfield_residual(cfg: GeometryConfig, psi: dict, m: int | None = None) -> dict:
    """Dirichlet norm on F_Gamma of the harmonic part removed by Q on F.

    On the annulus psi - Q psi is alpha (r/R)^n + beta (eps/r)^n with traces
    matching psi at R_e and (for n >= 1) at eps.  The two powers are
    orthogonal in the Dirichlet product over any annulus, so the residual
    is a sum of closed forms.
    """
    e, R = cfg.eps_hole, cfg.R_e
    FG = region_bounds(cfg, "FGamma")
    nmax = max(p.n for p in psi.values())
    r, w = disk_grid(m or 64 + nmax, R)
    logs = []
    norm2 = 0.0
    for key, p in psi.items():
        n = key[0]
        norm2 += mode_factor(n) * float(np.dot(w, p(r, 1) ** 2 + (n * n * p(r) ** 2 / r ** 2 if n else 0.0)))
        if n == 0:
            continue          # the free inner trace absorbs the constant
        q = (e / R) ** n
        outer, inner = float(p(np.array([R]))[0]), float(p(np.array([e]))[0])
        det = 1.0 - q * q
        alpha = (outer - q * inner) / det
        beta = (inner - q * outer) / det
        hi_ = HarmonicExpansion.interior(_unit(n, alpha), rho=R, support=(0.0, R))
        he_ = HarmonicExpansion.exterior(_unit(n, beta), rho=e, support=(e, math.inf))
        for h in (hi_, he_):
            if np.any(h.a):
                logs.append(log_dirichlet_energy(h, FG))
    resid = math.exp(0.5 * float(logsumexp(logs))) if logs else 0.0
    norm = math.sqrt(norm2)
    scale = trap_bound(cfg) * norm
    return {"residual": resid, "norm": norm, "bound_factor": trap_bound(cfg),
            "ratio": resid / scale if scale > 0 else 0.0}


def _unit(n: int, c: float) -> np.ndarray:
    a = np.zeros(n + 1)
    a[n] = c
    return a


def clamped_mode_field(n: int = 1, coeffs=(1.0, -0.5, 0.25), parity: str = "cos") -> dict:
    """Single-component S0(G) field built from clamped disk polynomials."""
    basis = build_mode_basis(None, DISK, n, max(4, len(coeffs)))
    c = np.zeros(basis.N_r)
    c[:len(coeffs)] = coeffs
    par = "radial" if n == 0 else parity
    return {(n, par): RadialProfile.from_basis(basis, c, par)}


# ------------------------------------------------------------- audit tables

@dataclass(frozen=True)
class AuditRow:
    lemma: str
    epsilon: float
    delta: float
    mode_or_seed: int
    value: float
    bound: float
    margin: float
    passed: bool


def _random_coeffs(gen, N: int, interior: bool):
    a, b = gen.standard_normal(N + 1), gen.standard_normal(N + 1)
    b[0] = 0.0
    if not interior:
        a[0] = 0.0
    return a, b


def lemma_audit_rows(cfg: GeometryConfig, far_cfg: GeometryConfig | None = None, seed: int = 0,
                     count: int = 100, N_modes: int = DEFAULT_MODES) -> list:
    """Seeded audit table covering every harmonic estimate of the geometry.

    ``far_cfg`` (delta > 4 delta0) hosts the far-field estimate of the
    vorticity splitting; the other checks run on ``cfg``.
    """
    rows = []

    def add(name, c, tag, ent):
        rows.append(AuditRow(name, c.eps_hole, c.delta, int(tag), ent["value"], ent["bound"],
                             ent["margin"], ent["pass"]))

    trap = interior_trap_audit(cfg, N_modes)
    for n, val in enumerate(trap["ratios"]):
        add("trap_mode", cfg, n, _entry(val, trap["bound"]))
    one = exterior_concentration_audit(cfg, HarmonicExpansion.exterior([0.0, 1.0], rho=cfg.eps_hole))
    add("exterior_mode1_FGamma", cfg, 1, one["l2_FGamma"])
    O, F = region_bounds(cfg, "O"), region_bounds(cfg, "F")
    for i in range(count):
        g = _rng.stream(seed, "harmonic-interior", i)
        a, b = _random_coeffs(g, N_modes, True)
        h = HarmonicExpansion.interior(a, b, rho=cfg.R_i)
        add("trap_mix", cfg, i, _entry(_ratio(h, O, F), trap["bound"]))
        ia = interior_concentration_audit(cfg, h)
        for k in ("l2_FSigma", "l2_FGamma", "h1_FSigma_l2"):
            add(f"interior_{k}", cfg, i, ia[k])
        g = _rng.stream(seed, "harmonic-exterior", i)
        a, b = _random_coeffs(g, N_modes, False)
        hk = HarmonicExpansion.exterior(a, b, rho=cfg.eps_hole)
        ea = exterior_concentration_audit(cfg, hk)
        for k in ("l2_FSigma", "l2_FGamma", "h1_FSigma", "h1_FGamma", "h1_outside"):
            add(f"exterior_{k}", cfg, i, ea[k])
        pr = project_HG(cfg, hk)
        add("project_HG", cfg, i, _entry(pr.ratio, pr.bound))
        g = _rng.stream(seed, "harmonic-hole", i)
        a, b = _random_coeffs(g, N_modes, True)
        tr = transmission_T(cfg, HarmonicExpansion.interior(a, b, rho=cfg.eps_hole,
                                                            support=(0.0, cfg.eps_hole)))
        add("transmission_T", cfg, i, _entry(tr.ratio, tr.bound))
    if far_cfg is not None:
        for i in range(count):
            dec = decompose_vorticity(far_cfg, random_vorticity(seed, i))
            add("split_pythagoras", far_cfg, i, _entry(dec.pythagoras, 0.0))
            add("split_orthogonality", far_cfg, i, _entry(max(dec.orthogonality.values()), 0.0))
            add("split_farfield", far_cfg, i, dec.farfield)
    return rows
