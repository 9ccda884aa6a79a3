"""Galerkin Navier-Stokes in the Stokes eigenbasis, stream-function form.

With psi = sum_k a_k psi_k and S0-orthonormal eigenfunctions the weak
form reduces to

    da_k/dt = -nu lambda_k a_k + sum_ij N_kij a_i a_j,
    N_kij = (D^2 psi_k grad_perp psi_i, grad psi_j)_{L2},

with grad_perp = (-d_y, d_x).  Every eigenfunction is f(r) T(n phi), so each
entry is a sum of products of one radial and one angular integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import Spectrum, compute_spectrum
from .errors import QuadratureFailure, StepRejected, SupportViolation
from .geometry import GeometryConfig
from .rng import stream
from .spectral import ANNULUS, DISK, disk_grid, gauss_legendre, log_grid, mode_factor

STEP_TOL = 1e-8


# ------------------------------------------------------------------ cutoff

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10 - 15 * x + 6 * x * x)


def _smoothstep_d(x):
    inside = (x > 0) & (x < 1)
    return np.where(inside, 30 * x * x * (1 - x) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffFunction:
    """Radial bump: quintic ramps on (r_in, r_in + ramp) and (r_out - ramp, r_out)."""

    r_in: float = 0.3
    r_out: float = 0.8
    ramp: float = 0.1
    margin: float = 0.05

    def __post_init__(self):
        if not 0 < self.r_in < self.r_in + 2 * self.ramp <= self.r_out:
            raise ValueError("cutoff needs r_in + 2 ramp <= r_out")

    def __call__(self, r, d: int = 0):
        r = np.asarray(r, dtype=float)
        up, dn = (r - self.r_in) / self.ramp, (self.r_out - r) / self.ramp
        if d == 0:
            return np.minimum(_smoothstep(up), _smoothstep(dn))
        return np.where(r < 0.5 * (self.r_in + self.r_out),
                        _smoothstep_d(up), -_smoothstep_d(dn)) / self.ramp

    @property
    def support(self):
        return (self.r_in, self.r_out)

    @property
    def max_grad(self) -> float:
        return 1.875 / self.ramp

    def grid(self, m: int = 48):
        """Piecewise Gauss rule on the support, exact across the ramp joints; weights for r dr."""
        x, w = gauss_legendre(m)
        edges = [self.r_in, self.r_in + self.ramp, self.r_out - self.ramp, self.r_out]
        rs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                r = a + 0.5 * (b - a) * (x + 1)
                rs.append(r)
                ws.append(0.5 * (b - a) * w * r)
        return np.concatenate(rs), np.concatenate(ws)

    def check(self, cfg: GeometryConfig | None, domain: str):
        if domain == ANNULUS and self.r_in * (1 - self.margin) <= cfg.eps_hole:
            raise SupportViolation(f"cutoff starts at {self.r_in} but the hole has radius {cfg.eps_hole}")


# ---------------------------------------------------------------- sampling

def _angular(pairs, phi):
    """T, T', T'' of every pair on the angular grid, each (N, M)."""
    T, T1, T2 = (np.zeros((len(pairs), phi.size)) for _ in range(3))
    for k, p in enumerate(pairs):
        n = p.n
        if p.parity == "radial":
            T[k] = 1.0
        elif p.parity == "cos":
            T[k], T1[k], T2[k] = np.cos(n * phi), -n * np.sin(n * phi), -n * n * np.cos(n * phi)
        else:
            T[k], T1[k], T2[k] = np.sin(n * phi), n * np.cos(n * phi), -n * n * np.sin(n * phi)
    return T, T1, T2


def _radial(pairs, r):
    """f, f', f'' of every pair on the radial grid, each (N, m)."""
    out = np.zeros((3, len(pairs), r.size))
    for key in {p.key for p in pairs}:
        idx = [k for k, p in enumerate(pairs) if p.key == key]
        X = np.array([pairs[k].coeffs for k in idx])
        E = pairs[idx[0]].basis.eval_all(r, 2)
        for d in range(3):
            out[d, idx] = X @ E[d]
    return out


def radial_grid(spec: Spectrum, refine: int = 1):
    n_top = max(p.n for p in spec.pairs)
    if spec.domain == DISK:
        return disk_grid(refine * (2 * spec.N_r + n_top + 8), 1.0 if spec.cfg is None else spec.cfg.R_e)
    return log_grid(spec.cfg.eps_hole, spec.cfg.R_e, m=refine * 32, panel=0.5)


def angular_grid(n_top: int):
    M = 4 * n_top + 4
    return 2 * np.pi * np.arange(M) / M, 2 * np.pi / M


def _triple(X, Y, Z, w=None):
    if w is not None:
        X = X * w
    return np.einsum("kp,ip,jp->kij", X, Y, Z, optimize=True)


@dataclass(frozen=True, eq=False)
class TrilinearTensor:
    N: np.ndarray
    lams: np.ndarray
    spec: Spectrum = field(repr=False)
    m_r: int = 0
    m_phi: int = 0

    @property
    def size(self) -> int:
        return self.lams.size

    def __call__(self, a: np.ndarray) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.N, a, a, optimize=True)


def _assemble(pairs, r, w, phi, wphi):
    f, f1, f2 = _radial(pairs, r)
    T, T1, T2 = _angular(pairs, phi)
    h = f1 / r - f / r ** 2
    fr, f1r, fr2 = f / r, f1 / r, f / r ** 2
    ang = lambda A, B, C: wphi * _triple(A, B, C)
    out = -_triple(f2, fr, f1, w) * ang(T, T1, T)          # H_rr a_r g_r
    out += _triple(h, f1, f1, w) * ang(T1, T, T)           # H_rphi a_phi g_r
    out -= _triple(h, fr, fr, w) * ang(T1, T1, T1)         # H_rphi a_r g_phi
    out += _triple(fr2, f1, fr, w) * ang(T2, T, T1)        # H_phiphi a_phi g_phi, T'' part
    out += _triple(f1r, f1, fr, w) * ang(T, T, T1)         # H_phiphi a_phi g_phi, f'/r part
    return out


def trilinear_tensor(spec: Spectrum, N: int | None = None, check: bool = True,
                     rtol: float = 1e-10) -> TrilinearTensor:
    """Entries (D^2 psi_k grad_perp psi_i, grad psi_j) for the first N eigenpairs."""
    pairs = spec.pairs if N is None else spec.pairs[:N]
    if N is not None and N > len(spec.pairs):
        raise ValueError(f"N={N} exceeds the {len(spec.pairs)} computed eigenpairs")
    n_top = max(p.n for p in pairs)
    phi, wphi = angular_grid(n_top)
    r, w = radial_grid(spec)
    Nt = _assemble(pairs, r, w, phi, wphi)
    if check:
        r2, w2 = radial_grid(spec, refine=2)
        N2 = _assemble(pairs, r2, w2, phi, wphi)
        scale = max(np.abs(N2).max(), 1e-300)
        err = np.abs(Nt - N2).max() / scale
        if err > rtol:
            raise QuadratureFailure(f"trilinear entries moved by {err:.2e} under refinement")
    lams = np.array([p.lam for p in pairs])
    return TrilinearTensor(Nt, lams, spec, r.size, phi.size)


def velocity_form_tensor(spec: Spectrum, N: int) -> np.ndarray:
    """((u_i . grad) v_k, u_j) with u = grad_perp psi, by 2D polar quadrature.

    Written with the polar convective derivative (including the curvature
    terms) as an independent check of the stream-form assembly.
    """
    pairs = spec.pairs[:N]
    n_top = max(p.n for p in pairs)
    phi, wphi = angular_grid(n_top)
    r, w = radial_grid(spec)
    f, f1, f2 = _radial(pairs, r)
    T, T1, T2 = _angular(pairs, phi)
    R = r[None, :, None]
    # psi derivatives on the (pair, r, phi) grid
    ps_r = f1[:, :, None] * T[:, None, :]
    ps_p = f[:, :, None] * T1[:, None, :]
    ps_rr = f2[:, :, None] * T[:, None, :]
    ps_rp = f1[:, :, None] * T1[:, None, :]
    ps_pp = f[:, :, None] * T2[:, None, :]
    ur, up = -ps_p / R, ps_r                       # u = grad_perp psi in (e_r, e_phi)
    dvr_dr, dvr_dp = -ps_rp / R + ps_p / R ** 2, -ps_pp / R
    dvp_dr, dvp_dp = ps_rr, ps_rp
    W = np.repeat(w * wphi, phi.size)
    out = np.zeros((len(pairs),) * 3)
    for k in range(len(pairs)):
        # ((u_i . grad) v_k) for every i, polar components
        cr = ur * dvr_dr[k] + up / R * dvr_dp[k] - up * ps_r[k] / R
        cp = ur * dvp_dr[k] + up / R * dvp_dp[k] + up * (-ps_p[k] / R) / R
        P = len(pairs)
        out[k] = (cr.reshape(P, -1) * W) @ ur.reshape(P, -1).T + (cp.reshape(P, -1) * W) @ up.reshape(P, -1).T
    return out


def neutrality_defect(tensor: TrilinearTensor, a: np.ndarray) -> float:
    """|sum a_k a_i a_j N_kij| relative to sum |a_k a_i a_j N_kij|."""
    prod = tensor.N * a[:, None, None] * a[None, :, None] * a[None, None, :]
    den = np.abs(prod).sum()
    return float(abs(prod.sum()) / den) if den else 0.0


# --------------------------------------------------------------- integrator

@dataclass(frozen=True)
class NSState:
    a: np.ndarray
    t: float
    nu: float
    domain: str
    N: int

    @property
    def s0_norm(self) -> float:
        return float(np.linalg.norm(self.a))


def step(state: NSState, tensor: TrilinearTensor, dt: float, tol: float = STEP_TOL):
    """One integrating-factor Heun step; the linear flow is exact.

    Returns (new_state, error_estimate); raises StepRejected when the
    difference to the embedded integrating-factor Euler step exceeds tol.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    E = np.exp(-state.nu * tensor.lams * dt)
    k1 = tensor(state.a)
    euler = E * (state.a + dt * k1)
    k2 = tensor(euler)
    a_new = E * (state.a + 0.5 * dt * k1) + 0.5 * dt * k2
    err = float(np.linalg.norm(a_new - euler))
    if err > tol:
        raise StepRejected(err, tol)
    return NSState(a_new, state.t + dt, state.nu, state.domain, state.N), err


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray
    lams: np.ndarray
    nu: float
    spec: Spectrum = field(repr=False)
    steps: int = 0
    rejected: int = 0
    dissipation: float = 0.0
    audits: dict = field(default_factory=dict)

    @property
    def s0(self) -> np.ndarray:
        return np.linalg.norm(self.coeffs, axis=1)

    @property
    def s1(self) -> np.ndarray:
        return np.sqrt(self.coeffs ** 2 @ self.lams)


def integrate(tensor: TrilinearTensor, a0, nu: float, T: float, dt0: float = 1e-3,
              out_times=None, tol: float = STEP_TOL, allow_inviscid: bool = False,
              domain: str = DISK) -> Trajectory:
    """Adaptive integration landing exactly on the output times."""
    if nu < 0 or (nu == 0 and not allow_inviscid):
        raise ValueError("nu must be positive (nu = 0 only in the inviscid audit)")
    a0 = np.asarray(a0, dtype=float)
    times = np.linspace(0.0, T, 101) if out_times is None else np.asarray(out_times, float)
    state = NSState(a0.copy(), 0.0, nu, domain, a0.size)
    out = [a0.copy()]
    dt, steps, rejected = dt0, 0, 0
    diss = 0.0
    lam1 = tensor.lams.min()
    step_ratio = 0.0
    for t_next in times[1:]:
        while state.t < t_next - 1e-15 * max(1.0, T):
            h = min(dt, t_next - state.t)
            try:
                new, err = step(state, tensor, h, tol)
            except StepRejected as exc:
                rejected += 1
                dt = h * max(0.2, 0.9 * math.sqrt(tol / exc.err))
                continue
            e0, e1 = state.a ** 2 @ tensor.lams, new.a ** 2 @ tensor.lams
            diss += 0.5 * h * (e0 + e1)
            bound = state.s0_norm * math.exp(-nu * lam1 * h)
            if bound > 0:
                step_ratio = max(step_ratio, new.s0_norm / bound - 1.0)
            state = new
            steps += 1
            if h == dt:
                dt = h * min(2.0, max(0.2, 0.9 * math.sqrt(tol / max(err, 1e-300))))
        state = NSState(state.a, float(t_next), nu, domain, state.N)
        out.append(state.a.copy())
    return Trajectory(times, np.array(out), tensor.lams, nu, tensor.spec, steps, rejected, diss,
                      {"max_step_excess": step_ratio})


def energy_audits(traj: Trajectory, lam1: float, tol: float = 1e-6) -> dict:
    """Exponential decay of the S0 norm and the dissipation-integral bound."""
    s0 = traj.s0
    bound = s0[0] * np.exp(-traj.nu * lam1 * traj.times) * (1 + tol)
    margin = bound - s0
    integral_bound = s0[0] ** 2 / (2 * traj.nu) * (1 + tol) if traj.nu > 0 else math.inf
    return {"decay_pass": bool(np.all(margin >= 0)), "decay_margin": margin,
            "dissipation": traj.dissipation, "dissipation_bound": integral_bound,
            "dissipation_pass": bool(traj.dissipation <= integral_bound)}


def solve_ns(cfg: GeometryConfig | None, domain: str, a0, nu: float = 0.05, T: float = 1.0,
             dt0: float = 1e-3, N: int = 24, spec: Spectrum | None = None, N_r: int = 48,
             n_max: int = 12, tol: float = 1e-6, out_times=None, tensor=None) -> Trajectory:
    """Integrate from coefficients a0 in the first N eigenpairs and attach the energy audits."""
    if spec is None:
        spec = compute_spectrum(cfg, domain, N, N_r, n_max)
    spec = spec.head(N)
    tensor = trilinear_tensor(spec) if tensor is None else tensor
    a0 = np.asarray(a0, dtype=float)
    if a0.size < tensor.size:
        a0 = np.concatenate([a0, np.zeros(tensor.size - a0.size)])
    traj = integrate(tensor, a0, nu, T, dt0, out_times, domain=domain)
    lam1 = float(tensor.lams.min())
    traj.audits.update(energy_audits(traj, lam1, tol))
    return traj


def mix_initial(N: int, seed: int = 0, first: int = 6) -> np.ndarray:
    """Unit-S0 combination of the first ``first`` eigenpairs with seeded normal weights."""
    a = np.zeros(N)
    a[:first] = stream(seed, "ns-init").standard_normal(first)
    return a / np.linalg.norm(a)


def eig_initial(N: int, k: int) -> np.ndarray:
    a = np.zeros(N)
    a[k - 1] = 1.0
    return a


# --------------------------------------------------------------- vorticity

class VorticitySampler:
    """Laplacians of the eigenfunctions and their r-derivatives on the cutoff grid."""

    def __init__(self, spec: Spectrum, chi: CutoffFunction, m: int | None = None):
        chi.check(spec.cfg, spec.domain)
        self.chi = chi
        self.r, self.w = chi.grid(m or 2 * spec.N_r + 24)
        self.c0, self.c1 = chi(self.r), chi(self.r, 1)
        self.blocks = {}
        for key, (idx, basis, X) in spec.blocks().items():
            self.blocks[key] = (idx, X @ basis.laplacian(self.r), X @ basis.laplacian(self.r, 1))

    def omega(self, a):
        """Mode-wise (omega, omega_r) samples for coefficient vector a."""
        out = {}
        for key, (idx, L0, L1) in self.blocks.items():
            sel = idx < a.size
            if sel.any():
                out[key] = (a[idx[sel]] @ L0[sel], a[idx[sel]] @ L1[sel])
        return out

    def norms(self, a):
        """||chi omega||_{L2} and ||grad(chi omega)||_{L2}."""
        l2 = h1 = 0.0
        for (n, _), (om, om_r) in self.omega(a).items():
            nf = mode_factor(n)
            l2 += nf * np.dot(self.w, (self.c0 * om) ** 2)
            dr = self.c1 * om + self.c0 * om_r
            h1 += nf * np.dot(self.w, dr ** 2 + (n * self.c0 * om / self.r) ** 2)
        return math.sqrt(l2), math.sqrt(h1)


def vorticity_diagnostics(traj: Trajectory, chi: CutoffFunction) -> dict:
    """Time series of ||chi omega|| and ||grad(chi omega)|| with their summaries."""
    vs = VorticitySampler(traj.spec, chi)
    vals = np.array([vs.norms(a) for a in traj.coeffs])
    return {"chi_l2": vals[:, 0], "chi_h1": vals[:, 1],
            "sup_chi_l2": float(vals[:, 0].max()),
            "int_chi_h1": float(np.trapezoid(vals[:, 1] ** 2, traj.times))}


# ----------------------------------------------------------- Ladyzhenskaya

class GradientSampler:
    """grad psi of the eigenfunctions on the full polar tensor grid."""

    def __init__(self, spec: Spectrum, N: int):
        pairs = spec.pairs[:N]
        n_top = max(p.n for p in pairs)
        self.phi, wphi = angular_grid(n_top)
        r, w = radial_grid(spec)
        f, f1, _ = _radial(pairs, r)
        T, T1, _ = _angular(pairs, self.phi)
        self.gr = (f1[:, :, None] * T[:, None, :]).reshape(len(pairs), -1)
        self.gp = ((f / r)[:, :, None] * T1[:, None, :]).reshape(len(pairs), -1)
        self.W = np.repeat(w * wphi, self.phi.size)
        self.lams = np.array([p.lam for p in pairs])

    def ratio(self, a) -> float:
        """||grad psi||_{L4}^2 / (||psi||_{S1} ||psi||_{S0})."""
        g2 = (a @ self.gr) ** 2 + (a @ self.gp) ** 2
        l4sq = math.sqrt(float(np.dot(self.W, g2 * g2)))
        return l4sq / (math.sqrt(float(a ** 2 @ self.lams)) * float(np.linalg.norm(a)))


def calibrate_ladyzhenskaya(sampler: GradientSampler, seed: int = 0, count: int = 64) -> float:
    """Largest ratio over single eigenfunctions and seeded random combinations."""
    N = sampler.lams.size
    best = max(sampler.ratio(np.eye(N)[k]) for k in range(N))
    rng = stream(seed, "ladyzhenskaya")
    for _ in range(count):
        best = max(best, sampler.ratio(rng.standard_normal(N)))
    return best


def ladyzhenskaya_audit(traj: Trajectory, sampler: GradientSampler, C: float,
                        slack: float = 0.1) -> dict:
    ratios = np.array([sampler.ratio(a) for a in traj.coeffs])
    return {"C": C, "max_ratio": float(ratios.max()),
            "pass": bool(ratios.max() <= (1 + slack) * C)}


# ------------------------------------------------------- shrinking hole

@dataclass(frozen=True)
class HoleRow:
    eps: float
    D_inf: float
    D_2: float
    vort_dist: float
    sup_chi_l2: float
    int_chi_h1: float


def s1_cross_gram(pairs_a, pairs_b, r, w) -> np.ndarray:
    """(Lap psi_a, Lap psi_b)_{L2} over the grid; zero across modes."""
    C = np.zeros((len(pairs_a), len(pairs_b)))
    for key in {p.key for p in pairs_a} & {p.key for p in pairs_b}:
        ia = [i for i, p in enumerate(pairs_a) if p.key == key]
        ib = [j for j, p in enumerate(pairs_b) if p.key == key]
        La = np.array([pairs_a[i].coeffs for i in ia]) @ pairs_a[ia[0]].basis.laplacian(r)
        Lb = np.array([pairs_b[j].coeffs for j in ib]) @ pairs_b[ib[0]].basis.laplacian(r)
        C[np.ix_(ia, ib)] = mode_factor(key[0]) * (La * w) @ Lb.T
    return C


def project_initial(specG: Spectrum, a0, specF: Spectrum, cfg: GeometryConfig) -> np.ndarray:
    """Eigen-coefficients of the S1-orthogonal projection of psi0 onto S1(F).

    For S0-orthonormal F eigenfunctions (psi0_eps, psi_j)_{S0} equals
    (psi0, psi_j)_{S1} / lambda_j, and the S1 product lives on F only.
    """
    from .eigen import fluid_grid
    r, w = fluid_grid(cfg, max(specG.N_r, specF.N_r))
    A = s1_cross_gram(specG.pairs[:len(a0)], specF.pairs, r, w)
    return (np.asarray(a0) @ A) / specF.lams


def _distance_series(trG, trF, C):
    a, b = trG.coeffs, trF.coeffs
    d2 = (a * a).sum(1) + (b * b).sum(1) - 2 * np.einsum("ti,ij,tj->t", a, C, b)
    return np.sqrt(np.maximum(d2, 0.0))


def hole_convergence(a0, eps_list, nu: float = 0.05, T: float = 1.0, N: int = 24,
                     N_r: int = 48, n_max: int = 12, R_i: float = 0.5,
                     chi: CutoffFunction | None = None, out_times=None):
    """Distances between the perforated and the full-disk trajectories.

    ``a0`` holds coefficients of psi0 in the first N disk eigenpairs.  Each
    F run starts from the S1 projection of psi0 and is compared with the
    disk run in S0(G), with F fields extended by their constant hole trace.
    Returns (rows, reference diagnostics of the disk run).
    """
    from .eigen import fluid_grid, s0_cross_gram
    from .geometry import build_geometry
    chi = chi or CutoffFunction()
    times = np.linspace(0.0, T, 101) if out_times is None else np.asarray(out_times, float)
    specG = compute_spectrum(None, DISK, N, N_r, n_max).head(N)
    a0 = np.asarray(a0, dtype=float)
    a0 = np.concatenate([a0, np.zeros(len(specG) - a0.size)])[:len(specG)]
    trG = solve_ns(None, DISK, a0, nu, T, spec=specG, out_times=times)
    vsG = VorticitySampler(specG, chi)
    omG = [vsG.omega(a) for a in trG.coeffs]
    rows = []
    for eps in eps_list:
        cfg = build_geometry(1.0, R_i, eps, strict=False)
        specF = compute_spectrum(cfg, ANNULUS, N, N_r, n_max).head(N)
        b0 = project_initial(specG, a0, specF, cfg)
        trF = solve_ns(cfg, ANNULUS, b0, nu, T, spec=specF, out_times=times)
        r, w = fluid_grid(cfg, N_r)
        C = s0_cross_gram(specG.pairs, specF.pairs, r, w)
        D = _distance_series(trG, trF, C)
        vsF = VorticitySampler(specF, chi)
        vd, l2, h1 = [], [], []
        for it, b in enumerate(trF.coeffs):
            omF = vsF.omega(b)
            tot = 0.0
            for key in set(omF) | set(omG[it]):
                diff = omF.get(key, (0.0,))[0] - omG[it].get(key, (0.0,))[0]
                tot += mode_factor(key[0]) * float(np.dot(vsF.w, (vsF.c0 * diff) ** 2))
            vd.append(tot)
            x, y = vsF.norms(b)
            l2.append(x)
            h1.append(y * y)
        rows.append(HoleRow(float(eps), float(D.max()), float(math.sqrt(np.trapezoid(D ** 2, times))),
                            float(np.trapezoid(vd, times)), float(max(l2)), float(np.trapezoid(h1, times))))
    ref = vorticity_diagnostics(trG, chi)
    return rows, ref
