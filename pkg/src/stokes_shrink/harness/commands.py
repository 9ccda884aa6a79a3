"""Experiment commands.  Each returns CSV tables and a JSON-ready summary.

Nothing time- or host-dependent enters the payloads, so equal configs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from functools import lru_cache

import numpy as np
from scipy.special import jn_zeros

from .. import harmonic as hm
from ..eigen import audit_sweep, compute_spectrum, convergence_sweep, weyl_check
from ..errors import CommandUnknown
from ..geometry import GeometryConfig, build_geometry, validate_hypothesis
from ..ns import (CutoffFunction, GradientSampler, calibrate_ladyzhenskaya, eig_initial,
                  hole_convergence, ladyzhenskaya_audit, mix_initial, neutrality_defect,
                  solve_ns, trilinear_tensor, vorticity_diagnostics)
from ..rng import stream
from ..semigroup import SemigroupQuery, default_time_grid, eigen_theta, semigroup_gap
from ..spectral import ANNULUS, DISK, random_field
from .config import ExperimentConfig

NEUTRALITY_RTOL = 1e-10


# ------------------------------------------------------------------ output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue().encode()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(x) for x in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def json_bytes(obj) -> bytes:
    return (json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n").encode()


def _summary(audits: dict, **extra) -> dict:
    failed = sorted(k for k, v in audits.items() if not v)
    return {"audits": audits, "failures": len(failed), "failed": failed,
            "pass": not failed, **extra}


# ----------------------------------------------------------------- helpers

@lru_cache(maxsize=64)
def spectrum(cfg: GeometryConfig | None, domain: str, k_max, N_r: int, n_max: int, quad_order,
             eig_tol: float):
    """Per-process spectrum memo keyed by geometry and truncation settings."""
    return compute_spectrum(cfg, domain, k_max, N_r, n_max, quad_order, eig_tol)


def _solver(ec: ExperimentConfig):
    s = ec.block("solver")
    return s["N_r"], s["n_max"], s["quad_order"], s["eig_tol"]


def _hole_cfg(ec: ExperimentConfig, eps: float) -> GeometryConfig:
    g = ec.block("geometry")
    return build_geometry(g["R_e"], g["R_i"], eps * g["R_e"], strict=False)


def bessel_oracle(count: int, n_top: int = 16) -> np.ndarray:
    """Smallest clamped-disk eigenvalues j_{n+1,m}^2 with cos/sin multiplicity."""
    vals = []
    for n in range(n_top + 1):
        z = jn_zeros(n + 1, count) ** 2
        vals.extend(z if n == 0 else np.repeat(z, 2))
    return np.sort(np.array(vals))[:count]


# ---------------------------------------------------------------- commands

def cmd_eigens(ec: ExperimentConfig):
    N_r, n_max, qo, tol = _solver(ec)
    k = ec.block("solver")["k_max"]
    specG = spectrum(None, DISK, k, N_r, n_max, qo, tol)
    specF = spectrum(ec.geometry, ANNULUS, k, N_r, n_max, qo, tol)
    rows = []
    for dom, sp in (("disk", specG), ("annulus", specF)):
        for j, p in enumerate(sp.pairs):
            grp = next(i for i, g in enumerate(sp.groups) if j in g)
            rows.append((dom, j + 1, p.lam, p.n, p.parity, grp + 1, p.residual))
    m = min(10, len(specG))
    oracle = bessel_oracle(m)
    rel = np.abs(specG.lams[:m] - oracle) / oracle
    kk = min(len(specG), len(specF))
    mono = specF.lams[:kk] - specG.lams[:kk] >= -1e-7 * specG.lams[:kk]
    weyl = weyl_check(specG)
    audits = {"disk_bessel": bool(rel.max() <= 1e-8), "monotone": bool(mono.all()),
              "weyl_bounded": weyl["bounded"]}
    tables = {"eigens.csv": csv_bytes(("domain", "k", "lambda", "n", "parity", "group", "residual"), rows)}
    return tables, _summary(audits, bessel_max_rel=float(rel.max()), weyl=weyl,
                            cutoff_disk=specG.cutoff, cutoff_annulus=specF.cutoff)


def cmd_sweep(ec: ExperimentConfig):
    _, n_max, _, _ = _solver(ec)
    sw = ec.block("sweep")
    g = ec.block("geometry")
    rows = convergence_sweep(g["R_e"], g["R_i"], sw["eps_list"], sw["k_max"], sw["N_r"], n_max)
    checks = audit_sweep(rows)
    by_k = {}
    for r in rows:
        by_k.setdefault(r.k, []).append(r)
    lam1 = by_k[1][0].lambda_G
    audits = {"gaps_nonnegative": all(c["nonnegative"] for c in checks.values()),
              "gaps_nonincreasing": all(c["nonincreasing"] for c in checks.values()),
              "k1_final_gap": bool(by_k[1][-1].gap < 1e-2 * lam1)}
    es = {}
    for k in range(1, min(4, sw["k_max"]) + 1):
        vals = [r.eigenspace_gap for r in by_k[k]]
        es[k] = vals
        audits[f"eigenspace_k{k}_decreasing"] = bool(all(b < a for a, b in zip(vals, vals[1:])))
        audits[f"eigenspace_k{k}_final"] = bool(vals[-1] < 0.05)
    table = csv_bytes(("epsilon", "k", "lambda_eps", "lambda_G", "gap", "eigenspace_gap"),
                      [(r.eps, r.k, r.lambda_eps, r.lambda_G, r.gap, r.eigenspace_gap) for r in rows])
    return {"sweep.csv": table}, _summary(audits, eigenspace=es)


def _audit_csv(rows) -> bytes:
    return csv_bytes(("lemma", "epsilon", "delta", "mode_or_seed", "value", "bound", "margin", "pass"),
                     [(r.lemma, r.epsilon, r.delta, r.mode_or_seed, r.value, r.bound, r.margin, r.passed)
                      for r in rows])


def harmonic_rows(ec: ExperimentConfig):
    h = ec.block("harmonic")
    g = ec.block("geometry")
    far = build_geometry(g["R_e"], g["R_i"], g["R_e"] * math.exp(-h["far_delta"] ** 2))
    rows = hm.lemma_audit_rows(ec.geometry, far, ec.data["seed"], h["count"], h["N_modes"])
    # the splitting remainder ||omega - omega_F|| must shrink along the eps sweep
    prev = math.inf
    omega = hm.random_vorticity(ec.data["seed"], 0)
    for eps in h["split_eps"]:
        dec = hm.decompose_vorticity(_hole_cfg(ec, eps), omega)
        n = dec.norms
        val = math.sqrt(n["O"] ** 2 + n["H"] ** 2 + n["W"] ** 2) / n["omega"]
        m = prev - val
        rows.append(hm.AuditRow("split_remainder_sweep", dec.cfg.eps_hole, dec.cfg.delta, 0, val,
                                prev, m, bool(m > 0)))
        prev = val
    q = {}
    for name, psi in (("mode1", hm.clamped_mode_field(1)),
                      ("random", random_field(stream(ec.data["seed"], "q-farfield"), 4, 6))):
        q[name] = hm.q_farfield_residual(ec.geometry, psi)
    return rows, q


def cmd_harmonic_audit(ec: ExperimentConfig):
    rows, q = harmonic_rows(ec)
    audits = {}
    for r in rows:
        audits[r.lemma] = audits.get(r.lemma, True) and r.passed
    worst = min(r.margin for r in rows)
    return {"harmonic_audit.csv": _audit_csv(rows)}, _summary(
        audits, rows=len(rows), violations=sum(not r.passed for r in rows), worst_margin=worst,
        q_farfield=q, empirical_c=max(v["ratio"] for v in q.values()))


def _thetas(ec, specG):
    out = {}
    for name in ec.block("semigroup")["thetas"]:
        if name == "random":
            out[name] = random_field(stream(ec.data["seed"], "theta"), 4, 6)
        else:
            out[name] = eigen_theta(specG, int(name[3:]))
    return out


def cmd_semigroup_gap(ec: ExperimentConfig):
    N_r, _, qo, tol = _solver(ec)
    sg = ec.block("semigroup")
    specG = spectrum(None, DISK, None, N_r, sg["n_max"], qo, tol)
    times = default_time_grid(sg["T"], sg["m_times"])
    thetas = _thetas(ec, specG)
    rows, rel = [], {}
    for eps in sg["eps_list"]:
        cfg = _hole_cfg(ec, eps)
        specF = spectrum(cfg, ANNULUS, None, N_r, sg["n_max"], qo, tol)
        for name, th in thetas.items():
            r = semigroup_gap(SemigroupQuery(th, sg["T"], times, specG, specF, cfg))
            rel.setdefault(name, []).append(r.sup / r.theta_norm)
            rows.append((name, cfg.eps_hole, r.sup, r.theta_norm, r.sup / r.theta_norm, r.tail_G, r.defect_F))
    audits = {}
    for name, v in rel.items():
        audits[f"{name}_decreasing"] = bool(all(b < a for a, b in zip(v, v[1:])))
        audits[f"{name}_final"] = bool(v[-1] < 1e-2)
    table = csv_bytes(("theta", "epsilon", "sup_weighted_gap", "theta_norm", "relative", "tail_G", "defect_F"), rows)
    return {"semigroup_gap.csv": table}, _summary(audits, relative=rel)


def _initial(ec, N):
    ns = ec.block("ns")
    return mix_initial(N, ns["seed"]) if ns["init"] == "mix" else eig_initial(N, ns["k"])


def _out_times(ns):
    return np.linspace(0.0, ns["T"], ns["n_out"])


def cmd_ns_run(ec: ExperimentConfig):
    N_r, n_max, qo, tol = _solver(ec)
    ns = ec.block("ns")
    cfg = None if ns["domain"] == "disk" else ec.geometry
    dom = DISK if cfg is None else ANNULUS
    spec = spectrum(cfg, dom, ns["N"], N_r, n_max, qo, tol).head(ns["N"])
    tensor = trilinear_tensor(spec)
    g = stream(ec.data["seed"], "neutrality")
    neutral = max(neutrality_defect(tensor, g.standard_normal(tensor.size)) for _ in range(50))
    a0 = _initial(ec, tensor.size)
    traj = solve_ns(cfg, dom, a0, ns["nu"], ns["T"], spec=spec, tensor=tensor, out_times=_out_times(ns))
    gs = GradientSampler(spec, tensor.size)
    lady = ladyzhenskaya_audit(traj, gs, calibrate_ladyzhenskaya(gs, ec.data["seed"]))
    chi = CutoffFunction()
    diag = vorticity_diagnostics(traj, chi) if cfg is None or chi.support[0] > cfg.eps_hole else {}
    au = traj.audits
    audits = {"neutrality": bool(neutral <= NEUTRALITY_RTOL), "energy_decay": au["decay_pass"],
              "dissipation": au["dissipation_pass"], "ladyzhenskaya": lady["pass"]}
    rows = [(t, s0, s1, m) for t, s0, s1, m in zip(traj.times, traj.s0, traj.s1, au["decay_margin"])]
    table = csv_bytes(("t", "s0_norm", "s1_norm", "decay_margin"), rows)
    return {"ns_run.csv": table}, _summary(
        audits, neutrality=neutral, size=tensor.size, steps=traj.steps, rejected=traj.rejected,
        dissipation=au["dissipation"], dissipation_bound=au["dissipation_bound"], ladyzhenskaya=lady,
        vorticity={k: v for k, v in diag.items() if np.ndim(v) == 0})


def cmd_ns_sweep(ec: ExperimentConfig):
    N_r, n_max, _, _ = _solver(ec)
    ns = ec.block("ns")
    g = ec.block("geometry")
    a0 = _initial(ec, ns["N"] + 1)
    rows, ref = hole_convergence(a0, ns["eps_list"], ns["nu"], ns["T"], ns["N"], N_r, n_max,
                                 R_i=g["R_i"] / g["R_e"], out_times=_out_times(ns))
    D2 = [r.D_2 for r in rows]
    sup = [r.sup_chi_l2 for r in rows]
    variation = (max(sup) - min(sup)) / max(sup)
    audits = {"D2_decreasing": bool(all(b < a for a, b in zip(D2, D2[1:]))),
              "chi_l2_uniform": bool(variation < 0.05)}
    table = csv_bytes(("epsilon", "D_inf", "D_2", "vorticity_distance", "sup_chi_l2", "int_chi_h1"),
                      [(r.eps, r.D_inf, r.D_2, r.vort_dist, r.sup_chi_l2, r.int_chi_h1) for r in rows])
    ref = {k: v for k, v in ref.items() if np.ndim(v) == 0}
    return {"ns_sweep.csv": table}, _summary(audits, variation=variation, reference=ref)


def cmd_audit_all(ec: ExperimentConfig):
    """Geometry hypothesis plus every harmonic-function estimate (seeded)."""
    hyp = validate_hypothesis(ec.geometry)
    rows, q = harmonic_rows(ec)
    audits = {"hypothesis": hyp["pass"]}
    for r in rows:
        audits[r.lemma] = audits.get(r.lemma, True) and r.passed
    geo = csv_bytes(("check", "lhs", "rhs", "margin", "pass"),
                    [(c["name"], c["lhs"], c["rhs"], c["margin"], c["passed"]) for c in hyp["checks"]])
    return {"hypothesis.csv": geo, "harmonic_audit.csv": _audit_csv(rows)}, _summary(
        audits, rows=len(rows), violations=sum(not r.passed for r in rows), q_farfield=q)


COMMANDS = {
    "eigens": cmd_eigens,
    "sweep": cmd_sweep,
    "harmonic-audit": cmd_harmonic_audit,
    "semigroup-gap": cmd_semigroup_gap,
    "ns-run": cmd_ns_run,
    "ns-sweep": cmd_ns_sweep,
    "audit-all": cmd_audit_all,
}


def get_command(name: str):
    try:
        return COMMANDS[name]
    except KeyError:
        raise CommandUnknown(f"unknown command {name!r}; choose from {sorted(COMMANDS)}") from None
