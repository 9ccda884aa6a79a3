"""Concentric four-disk geometry and the named radial regions."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import HypothesisViolation, NonpositiveRadius, UnknownTag


@dataclass(frozen=True)
class GeometryConfig:
    """All radii of the shrinking-hole geometry, in units where R_e = 1.

    ``length_scale`` is the physical outer radius the inputs were given in.
    """

    R_e: float
    R_i: float
    eps_hole: float
    delta: float
    delta0: float
    R_plus: float
    R_minus: float
    length_scale: float = 1.0

    @property
    def admissible(self) -> bool:
        return validate_hypothesis(self)["pass"]

    @property
    def log_eps(self) -> float:
        return math.log(self.eps_hole)


@dataclass(frozen=True)
class Region:
    tag: str
    r_lo: float
    r_hi: float


# canonical tag -> accepted spellings
_TAGS = {
    "O": ("O", "hole"),
    "F": ("F", "fluid"),
    "FSigma": ("FSigma", "FΣ", "F_Sigma", "boundary-layer"),
    "FGamma": ("FGamma", "FΓ", "F_Gamma", "far-field"),
    "C+": ("C+", "C₊", "C_plus"),
    "Ce": ("Ce", "C_e"),
    "Ci": ("Ci", "C_i"),
    "D-": ("D-", "D₋", "D_minus"),
    "D+": ("D+", "D₊", "D_plus"),
    "Di": ("Di", "D_i"),
    "G": ("G", "full"),
}
_ALIASES = {alias: tag for tag, names in _TAGS.items() for alias in names}


def build_geometry(R_e: float, R_i: float, eps_hole: float,
                   delta_override: float | None = None,
                   strict: bool = True) -> GeometryConfig:
    """Derive delta, delta0, R_plus and R_minus from the three input radii.

    delta defaults to its largest admissible value sqrt(ln(R_e/eps)), which
    makes R_minus coincide with the hole radius.  With ``strict=False`` an
    inadmissible geometry is returned instead of raising; spectral sweeps
    only need the hole radius and use this for holes that are too large for
    the hypothesis.
    """
    for name, val in (("R_e", R_e), ("R_i", R_i), ("eps_hole", eps_hole)):
        if not (isinstance(val, (int, float)) and math.isfinite(val)) or val <= 0:
            raise NonpositiveRadius(f"{name} must be a positive finite length, got {val!r}")
    if not (R_i < R_e and eps_hole < R_e):
        raise NonpositiveRadius(f"need eps_hole < R_e and R_i < R_e, got {eps_hole}, {R_i}, {R_e}")
    scale = float(R_e)
    ri, eps = R_i / scale, eps_hole / scale
    delta_max = math.sqrt(-math.log(eps))
    delta0 = 2.0 + math.log(1.0 / ri)
    delta = delta_max if delta_override is None else float(delta_override)
    if strict:
        if delta_max <= delta0:
            raise HypothesisViolation(
                f"sqrt(ln(R_e/eps))={delta_max:.6g} <= delta0={delta0:.6g}")
        if not (delta0 < delta <= delta_max):
            raise HypothesisViolation(
                f"delta={delta:.6g} outside ({delta0:.6g}, {delta_max:.6g}]")
    # at the maximal delta, R_minus equals eps exactly (avoid a rounding gap)
    r_minus = eps if delta_override is None else math.exp(-delta * delta)
    return GeometryConfig(R_e=1.0, R_i=ri, eps_hole=eps, delta=delta, delta0=delta0,
                          R_plus=math.exp(-delta), R_minus=r_minus, length_scale=scale)


def region_bounds(cfg: GeometryConfig, tag: str) -> Region:
    """Radial interval (r_lo, r_hi) of a named region."""
    key = _ALIASES.get(tag)
    if key is None:
        raise UnknownTag(f"unknown region tag {tag!r}")
    e, rm, rp, ri, re = cfg.eps_hole, cfg.R_minus, cfg.R_plus, cfg.R_i, cfg.R_e
    lo, hi = {
        "O": (0.0, e), "F": (e, re), "FSigma": (e, rp), "FGamma": (rp, re),
        "C+": (rm, rp), "Ce": (rp, re), "Ci": (rm, ri), "D-": (0.0, rm),
        "D+": (0.0, rp), "Di": (0.0, ri), "G": (0.0, re),
    }[key]
    return Region(key, lo, hi)


def validate_hypothesis(cfg: GeometryConfig, rtol: float = 1e-12) -> dict:
    """Check every inclusion and scale relation of the geometry hypothesis.

    Returns ``{"checks": [...], "pass": bool}``; each check carries the two
    compared quantities and a signed margin (positive means satisfied).
    """
    def strict_lt(name, a, b):
        return dict(name=name, lhs=a, rhs=b, margin=b - a, passed=a < b)

    def le(name, a, b):
        return dict(name=name, lhs=a, rhs=b, margin=b - a, passed=a <= b * (1 + rtol))

    def eq(name, a, b):
        err = abs(a - b)
        return dict(name=name, lhs=a, rhs=b, margin=-err, passed=err <= rtol * max(abs(b), 1e-300))

    e = cfg.eps_hole
    dmax = math.sqrt(-math.log(e / cfg.R_e)) if 0 < e < cfg.R_e else float("nan")
    checks = [
        strict_lt("0 < eps", 0.0, e),
        le("eps <= R_minus", e, cfg.R_minus),
        strict_lt("R_minus < R_plus", cfg.R_minus, cfg.R_plus),
        strict_lt("R_plus < R_i", cfg.R_plus, cfg.R_i),
        strict_lt("R_i < R_e", cfg.R_i, cfg.R_e),
        strict_lt("delta0 < delta", cfg.delta0, cfg.delta),
        le("delta <= sqrt(ln(R_e/eps))", cfg.delta, dmax),
        eq("delta0 = 2 + ln(R_e/R_i)", cfg.delta0, 2.0 + math.log(cfg.R_e / cfg.R_i)),
        eq("R_plus = R_e exp(-delta)", cfg.R_plus, cfg.R_e * math.exp(-cfg.delta)),
        eq("R_minus = R_e exp(-delta^2)", cfg.R_minus, cfg.R_e * math.exp(-cfg.delta ** 2)),
    ]
    return {"checks": checks, "pass": all(c["passed"] for c in checks)}
