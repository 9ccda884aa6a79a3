import math

import numpy as np
import pytest

from stokes_shrink.eigen import compute_spectrum
from stokes_shrink.errors import StepRejected, SupportViolation
from stokes_shrink.geometry import build_geometry
from stokes_shrink.ns import (CutoffFunction, GradientSampler, NSState, TrilinearTensor,
                              VorticitySampler, calibrate_ladyzhenskaya, eig_initial,
                              hole_convergence, integrate, mix_initial, neutrality_defect,
                              solve_ns, step, trilinear_tensor, velocity_form_tensor)
from stokes_shrink.spectral import ANNULUS, DISK


@pytest.fixture(scope="module")
def disk12():
    spec = compute_spectrum(None, DISK, 12, 32, 6).head(12)
    return spec, trilinear_tensor(spec)


@pytest.fixture(scope="module")
def annulus12():
    cfg = build_geometry(1.0, 0.5, 1e-3, strict=False)
    spec = compute_spectrum(cfg, ANNULUS, 12, 32, 6).head(12)
    return spec, trilinear_tensor(spec)


def test_all_radial_entries_vanish(disk12, annulus12):
    for spec, t in (disk12, annulus12):
        rad = [k for k, p in enumerate(spec.pairs) if p.n == 0]
        assert len(rad) >= 2
        assert np.abs(t.N[np.ix_(rad, rad, rad)]).max() == 0.0


def test_triad_selection(disk12, annulus12):
    for spec, t in (disk12, annulus12):
        ns = [p.n for p in spec.pairs]
        scale = np.abs(t.N).max()
        for k, i, j in np.ndindex(t.N.shape):
            if ns[k] not in (ns[i] + ns[j], abs(ns[i] - ns[j])):
                assert abs(t.N[k, i, j]) <= 1e-14 * scale


def test_antisymmetry_and_neutrality(disk12, annulus12):
    for spec, t in (disk12, annulus12):
        scale = np.abs(t.N).max()
        assert np.abs(t.N + t.N.transpose(2, 1, 0)).max() <= 1e-12 * scale
        g = np.random.default_rng(0)
        for _ in range(5):
            a = g.standard_normal(t.size)
            assert neutrality_defect(t, a) <= 1e-10
            assert abs(a @ t(a)) <= 1e-12 * scale * np.sum(np.abs(a)) ** 3


def test_velocity_form_cross_check(disk12, annulus12):
    for spec, t in (disk12, annulus12):
        V = velocity_form_tensor(spec, t.size)
        assert np.abs(V - t.N).max() <= 1e-12 * np.abs(t.N).max()


def test_tensor_size_check(disk12):
    spec, _ = disk12
    with pytest.raises(ValueError):
        trilinear_tensor(spec, len(spec) + 1)


def _zero(t):
    return TrilinearTensor(np.zeros_like(t.N), t.lams, t.spec)


def test_linear_flow_is_exact(disk12):
    _, t = disk12
    a0 = mix_initial(t.size)
    tr = integrate(_zero(t), a0, 0.05, 1.0)
    expect = a0[None, :] * np.exp(-0.05 * np.outer(tr.times, t.lams))
    assert np.max(np.abs(tr.coeffs - expect)) < 1e-14


def _fixed_step(t, a0, nu, T, n):
    s = NSState(np.asarray(a0, float), 0.0, nu, DISK, a0.size)
    for _ in range(n):
        s, _ = step(s, t, T / n, tol=math.inf)
    return s.a


def test_second_order_convergence(disk12):
    _, t = disk12
    a0 = 3.0 * mix_initial(t.size)
    ref = _fixed_step(t, a0, 0.05, 0.5, 4096)
    errs = [np.linalg.norm(_fixed_step(t, a0, 0.05, 0.5, n) - ref) for n in (64, 128, 256)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(rates - 2.0) < 0.15)


def test_step_rejection_and_validation(disk12):
    _, t = disk12
    s = NSState(3.0 * mix_initial(t.size), 0.0, 0.05, DISK, t.size)
    with pytest.raises(StepRejected):
        step(s, t, 0.1, tol=1e-14)
    with pytest.raises(ValueError):
        step(s, t, 0.0)


def test_inviscid_conservation(disk12):
    _, t = disk12
    a0 = mix_initial(t.size)
    tr = integrate(t, a0, 0.0, 0.5, allow_inviscid=True, tol=1e-10)
    assert np.max(np.abs(tr.s0 - 1.0)) < 1e-7
    with pytest.raises(ValueError):
        integrate(t, a0, 0.0, 0.5)


def test_audits_pass(disk12):
    spec, t = disk12
    tr = solve_ns(None, DISK, mix_initial(t.size), 0.05, 1.0, spec=spec, tensor=t)
    assert tr.audits["decay_pass"] and tr.audits["dissipation_pass"]
    assert tr.audits["dissipation"] <= tr.audits["dissipation_bound"]
    assert tr.audits["max_step_excess"] <= 1e-6


def test_duhamel_bound(disk12):
    # the linear flow is a contraction, so the deviation from it is bounded
    # by the accumulated size of the nonlinear term
    spec, t = disk12
    a0 = 3.0 * mix_initial(t.size)
    for nu in (0.05, 5.0):
        tr = solve_ns(None, DISK, a0, nu, 0.2, spec=spec, tensor=t)
        lin = a0[None, :] * np.exp(-nu * np.outer(tr.times, t.lams))
        dev = np.linalg.norm(tr.coeffs - lin, axis=1)
        forcing = np.array([np.linalg.norm(t(a)) for a in tr.coeffs])
        acc = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(tr.times) * (forcing[1:] + forcing[:-1]))])
        assert np.all(dev <= acc * (1 + 1e-3) + 1e-12)
        assert dev[-1] > 0


def test_eigenmode_start_is_pure_decay(disk12):
    # a single eigenfunction is a steady solution of the nonlinear term
    spec, t = disk12
    a0 = eig_initial(t.size, 1)
    assert np.abs(t(a0)).max() <= 1e-14 * np.abs(t.N).max()
    tr = solve_ns(None, DISK, a0, 0.05, 1.0, spec=spec, tensor=t)
    assert tr.s0[-1] == pytest.approx(math.exp(-0.05 * t.lams[0]), rel=1e-12)


def test_initial_conditions():
    a = mix_initial(24, 3)
    assert np.linalg.norm(a) == pytest.approx(1.0) and np.all(a[6:] == 0)
    assert np.array_equal(a, mix_initial(24, 3)) and not np.array_equal(a, mix_initial(24, 4))
    assert np.array_equal(eig_initial(4, 2), [0, 1, 0, 0])


def test_cutoff_function():
    chi = CutoffFunction()
    assert chi(0.2) == 0.0 and chi(0.5) == 1.0 and chi(0.9) == 0.0
    r = np.linspace(0.31, 0.79, 97)
    h = 1e-6
    fd = (chi(r + h) - chi(r - h)) / (2 * h)
    assert np.max(np.abs(fd - chi(r, 1))) < 1e-6
    assert np.max(np.abs(chi(r, 1))) <= chi.max_grad * (1 + 1e-12)
    rg, wg = chi.grid(32)
    assert np.dot(wg, np.ones_like(rg)) == pytest.approx(0.5 * (0.8 ** 2 - 0.3 ** 2), rel=1e-14)
    with pytest.raises(ValueError):
        CutoffFunction(0.3, 0.4, 0.1)


def test_cutoff_support_violation():
    cfg = build_geometry(1.0, 0.5, 1e-2, strict=False)
    spec = compute_spectrum(cfg, ANNULUS, 4, 24, 3)
    with pytest.raises(SupportViolation):
        VorticitySampler(spec, CutoffFunction(0.0102, 0.5, 0.1))
    VorticitySampler(spec, CutoffFunction(0.05, 0.5, 0.1))


def test_vorticity_sampler(disk12):
    spec, t = disk12
    vs = VorticitySampler(spec, CutoffFunction())
    assert vs.norms(np.zeros(t.size)) == (0.0, 0.0)
    a = mix_initial(t.size)
    l2, h1 = vs.norms(a)
    assert vs.norms(2 * a)[0] == pytest.approx(2 * l2) and h1 > 0


def test_ladyzhenskaya_ratio(disk12):
    spec, t = disk12
    gs = GradientSampler(spec, t.size)
    a = mix_initial(t.size)
    assert gs.ratio(3 * a) == pytest.approx(gs.ratio(a), rel=1e-12)
    C = calibrate_ladyzhenskaya(gs, count=16)
    assert C >= max(gs.ratio(np.eye(t.size)[k]) for k in range(t.size))


def test_hole_convergence_small():
    a0 = mix_initial(8)
    rows, ref = hole_convergence(a0, [1e-2, 1e-3, 1e-4], T=0.2, N=8, N_r=32, n_max=6,
                                 out_times=np.linspace(0, 0.2, 21))
    D2 = [r.D_2 for r in rows]
    assert all(b < a for a, b in zip(D2, D2[1:]))
    assert all(r.D_inf >= 0 for r in rows)
    sup = [r.sup_chi_l2 for r in rows]
    assert max(abs(s - ref["sup_chi_l2"]) for s in sup) < 0.05 * ref["sup_chi_l2"]
