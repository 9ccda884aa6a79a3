import dataclasses
import math

import pytest

from stokes_shrink.errors import HypothesisViolation, NonpositiveRadius, UnknownTag
from stokes_shrink.geometry import build_geometry, region_bounds, validate_hypothesis


def test_derived_radii(cfg9):
    assert cfg9.delta == pytest.approx(3.0, rel=1e-15)
    assert cfg9.delta0 == pytest.approx(2.0 + math.log(2.0), rel=1e-15)
    assert cfg9.R_plus == pytest.approx(math.exp(-3.0), rel=1e-14)
    assert cfg9.R_minus == cfg9.eps_hole == pytest.approx(math.exp(-9.0), rel=1e-15)
    assert cfg9.admissible


def test_hole_too_large():
    with pytest.raises(HypothesisViolation):
        build_geometry(1.0, 0.5, 0.2)


@pytest.mark.parametrize("args", [(1.0, 0.5, 0.0), (1.0, -0.5, 1e-4), (0.0, 0.5, 1e-4),
                                  (1.0, 0.5, float("nan")), (1.0, 1.5, 1e-4)])
def test_degenerate_radii(args):
    with pytest.raises(NonpositiveRadius):
        build_geometry(*args)


def test_unit_normalisation():
    g = build_geometry(2.0, 1.0, 2.0 * math.exp(-9.0))
    assert g.R_e == 1.0 and g.length_scale == 2.0
    assert g.delta == pytest.approx(3.0) and g.R_i == pytest.approx(0.5)


def test_delta_override():
    g = build_geometry(1.0, 0.5, math.exp(-9.0), delta_override=2.9)
    assert g.R_minus == pytest.approx(math.exp(-2.9 ** 2))
    assert g.R_minus > g.eps_hole
    assert validate_hypothesis(g)["pass"]
    with pytest.raises(HypothesisViolation):
        build_geometry(1.0, 0.5, math.exp(-9.0), delta_override=2.5)


def test_non_strict_returns_inadmissible():
    g = build_geometry(1.0, 0.5, 1e-2, strict=False)
    assert g.eps_hole == 1e-2 and not g.admissible


@pytest.mark.parametrize("tag,lo,hi", [
    ("FGamma", math.exp(-3), 1.0), ("FΓ", math.exp(-3), 1.0), ("C+", math.exp(-9), math.exp(-3)),
    ("F", math.exp(-9), 1.0), ("FSigma", math.exp(-9), math.exp(-3)), ("O", 0.0, math.exp(-9)),
    ("Ci", math.exp(-9), 0.5), ("Ce", math.exp(-3), 1.0), ("D-", 0.0, math.exp(-9)), ("G", 0.0, 1.0),
])
def test_region_bounds(cfg9, tag, lo, hi):
    r = region_bounds(cfg9, tag)
    assert r.r_lo == pytest.approx(lo, rel=1e-14) and r.r_hi == pytest.approx(hi, rel=1e-14)


def test_region_partition(cfg9):
    s, g, f = (region_bounds(cfg9, t) for t in ("FSigma", "FGamma", "F"))
    assert s.r_lo == f.r_lo and s.r_hi == g.r_lo and g.r_hi == f.r_hi


def test_unknown_tag(cfg9):
    with pytest.raises(UnknownTag):
        region_bounds(cfg9, "X")


def test_validate_hypothesis(cfg9):
    rep = validate_hypothesis(cfg9)
    assert rep["pass"] and all(c["passed"] for c in rep["checks"])
    bad = validate_hypothesis(dataclasses.replace(cfg9, delta=2.0))
    assert not bad["pass"]
    assert not next(c for c in bad["checks"] if c["name"] == "delta0 < delta")["passed"]
    inverted = validate_hypothesis(dataclasses.replace(cfg9, eps_hole=2 * cfg9.R_minus))
    assert not next(c for c in inverted["checks"] if c["name"] == "eps <= R_minus")["passed"]
