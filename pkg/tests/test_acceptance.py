"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line (run with -s to see them).

Criterion 5 starts on the steady-state manifold x(0) = X xi(0): the
noise-free exactness being certified is algebraic, and a zero initial
state leaves an O(e^{-lambda t1}) transient bias above the 1e-6 bound.
"""
import time

import numpy as np

from lftid import (JordanGenerator, assemble, build_parametric,
                   build_regression, check_excitation, decompose, dlse_fit,
                   estimate_tfm, estimate_theta, eval_tfm, eval_tfm_lft,
                   identify, simulate_samples, solve_steady_maps,
                   steady_matrix_jordan, steady_matrix_from_tfm,
                   steady_output, tfm_derivative, update_tfm)
from lftid.benchmarks import (THETA_REFERENCE, mass_spring_plant,
                              two_tone_generator)
from lftid.errors import NotIdentifiableFromData
from lftid.experiments import (generate_times, pre_settle_times,
                               relative_error)
from lftid.model import LftPlant
from lftid.response import SampleSet

from conftest import (augmented_outputs, fd_tfm_derivative,
                      kron_steady_solve, random_generator, random_plant)

REFERENCE_SETTLE_TIME = 2.3258
E_KINDS = ("identity", "invertible", "singular")


def _report(num, ok, detail):
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_tfm_form_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for i in range(100):
        m_x = int(rng.integers(2, 7))
        m_theta = int(rng.integers(1, 5))
        dims = dict(m_u=int(rng.integers(1, 4)),
                    m_y=int(rng.integers(1, 4)),
                    m_v=int(rng.integers(1, 4)),
                    m_z=int(rng.integers(1, 4)))
        plant, theta = random_plant(rng, m_x=m_x, m_theta=m_theta,
                                    e_kind=E_KINDS[i % 3], stable=False,
                                    **dims)
        for _ in range(20):
            s = complex(rng.standard_normal(), rng.standard_normal()) * 2.0
            h1 = eval_tfm(plant, theta, s)
            h2 = eval_tfm_lft(plant, theta, s)
            rel = np.abs(h1 - h2).max() / (1.0 + np.abs(h1).max())
            worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    _report(1, worst < 1e-9 and elapsed < 10.0,
            f"100 instances x 20 points, worst rel err {worst:.2e}, "
            f"{elapsed:.1f}s")


def test_criterion_2_steady_map_cross_validation():
    rng = np.random.default_rng(102)
    start = time.perf_counter()
    worst_t1 = worst_kron = 0.0
    for i in range(50):
        plant, theta = random_plant(rng, m_x=int(rng.integers(2, 6)),
                                    e_kind=E_KINDS[i % 3])
        gen = random_generator(rng, m_u=plant.m_u,
                               m_r=int(rng.integers(0, 3)),
                               m_c=int(rng.integers(0, 3)) or 1)
        maps = solve_steady_maps(plant, theta, gen)
        A, B, C, D = assemble(plant, theta)
        sylvester = C @ maps.X + D @ gen.Pi
        from_tfm = steady_matrix_from_tfm(plant, theta, decompose(gen))
        X_ref, _ = kron_steady_solve(plant.E, A, B, gen.Pi, gen.Xi)
        kron = C @ X_ref + D @ gen.Pi
        scale = 1.0 + np.abs(kron).max()
        worst_t1 = max(worst_t1, np.abs(from_tfm - sylvester).max() / scale)
        worst_kron = max(worst_kron, np.abs(sylvester - kron).max() / scale)
    elapsed = time.perf_counter() - start
    _report(2, worst_t1 < 1e-8 and worst_kron < 1e-9 and elapsed < 10.0,
            f"50 instances, transfer-value vs Sylvester path {worst_t1:.2e}, "
            f"Kronecker {worst_kron:.2e}, {elapsed:.1f}s")


def test_criterion_3_steady_state_formula_vs_simulation():
    start = time.perf_counter()
    plant, gen, theta = (mass_spring_plant(), two_tone_generator(),
                         THETA_REFERENCE)
    times = np.linspace(3.0 * REFERENCE_SETTLE_TIME,
                        3.0 * REFERENCE_SETTLE_TIME + 8.0, 60)
    y_total = augmented_outputs(plant, theta, gen, np.zeros(4), times)
    y_steady = np.array([steady_output(plant, theta, gen, t)
                         for t in times])
    peak = np.abs(y_steady).max()
    worst = np.abs(y_total - y_steady).max() / peak
    elapsed = time.perf_counter() - start
    _report(3, worst < 1e-4 and elapsed < 5.0,
            f"max |y - y_s| / max|y_s| = {worst:.2e} for t >= 3 t_s, "
            f"{elapsed:.1f}s")


def test_criterion_4_jordan_block_and_derivatives():
    rng = np.random.default_rng(104)
    worst_jordan = 0.0
    for m_xi in (2, 3, 4):
        for _ in range(4):
            plant, theta = random_plant(rng, m_x=int(rng.integers(2, 5)),
                                        e_kind=E_KINDS[m_xi % 3])
            T = rng.standard_normal((m_xi, m_xi)) + 2.0 * np.eye(m_xi)
            jgen = JordanGenerator(lambda_r=float(rng.uniform(0.0, 1.0)),
                                   T=T,
                                   Pi=rng.standard_normal((plant.m_u,
                                                           m_xi)),
                                   xi0=rng.standard_normal(m_xi))
            M = steady_matrix_jordan(plant, theta, jgen)
            A, B, C, D = assemble(plant, theta)
            Xi = jgen.T @ jgen.jordan_block() @ np.linalg.inv(jgen.T)
            X_ref, _ = kron_steady_solve(plant.E, A, B, jgen.Pi, Xi)
            want = C @ X_ref + D @ jgen.Pi
            worst_jordan = max(worst_jordan, np.abs(M - want).max() /
                               (1.0 + np.abs(want).max()))
    worst_deriv = 0.0
    for _ in range(10):
        plant, theta = random_plant(rng, e_kind="identity")
        s = complex(rng.standard_normal(), rng.standard_normal())
        want = fd_tfm_derivative(plant, theta, s)
        got = tfm_derivative(plant, theta, s, 1)
        worst_deriv = max(worst_deriv, np.abs(got - want).max() /
                          (1.0 + np.abs(want).max()))
    _report(4, worst_jordan < 1e-8 and worst_deriv < 1e-6,
            f"Jordan vs Kronecker {worst_jordan:.2e}, derivative vs "
            f"finite differences {worst_deriv:.2e}")


def test_criterion_5_noise_free_exact_recovery():
    start = time.perf_counter()
    plant, gen, theta = (mass_spring_plant(), two_tone_generator(),
                         THETA_REFERENCE)
    times = generate_times((0.2, 1.0), 200, t_start=REFERENCE_SETTLE_TIME,
                           seed=105)
    maps = solve_steady_maps(plant, theta, gen)
    samples = simulate_samples(plant, theta, maps.X @ gen.xi0, gen, times,
                               0.0, seed=None)
    result = identify(plant, gen, samples, theta_ref=theta)
    rel = np.linalg.norm(result.theta - theta) / np.linalg.norm(theta)
    elapsed = time.perf_counter() - start
    _report(5, rel < 1e-6 and elapsed < 5.0,
            f"N=200 noise-free recovery rel err {rel:.2e}, {elapsed:.1f}s")


def test_criterion_6_batch_recursive_equivalence():
    plant, gen, theta = (mass_spring_plant(), two_tone_generator(),
                         THETA_REFERENCE)
    times = generate_times((0.2, 1.0), 500, t_start=REFERENCE_SETTLE_TIME,
                           seed=106)
    samples = simulate_samples(plant, theta, np.zeros(4), gen, times,
                               0.25, seed=106)
    reg = build_regression(plant, gen, samples)
    batch = estimate_tfm(reg)
    r = reg.Ubar.shape[0]
    head = type(reg)(Ybar=reg.Ybar[:, :r], Ubar=reg.Ubar[:, :r],
                     Utilde=reg.Utilde[:, :r], spectrum=reg.spectrum,
                     g_real=reg.g_real, g_complex=reg.g_complex,
                     m_z=reg.m_z, m_u=reg.m_u)
    rec = estimate_tfm(head)
    for k in range(r, 500):
        rec = update_tfm(rec, reg.Ybar[:, k], reg.Ubar[:, k])
    rel = np.abs(rec.Hbar - batch.Hbar).max() / \
        (1.0 + np.abs(batch.Hbar).max())
    _report(6, rel < 1e-8,
            f"batch vs recursive over N=500: rel err {rel:.2e}")


def test_criterion_7_consistency_scaling():
    start = time.perf_counter()
    plant, gen, theta = (mass_spring_plant(), two_tone_generator(),
                         THETA_REFERENCE)
    sigma, trials = 0.25, 200
    mse = {}
    for N in (100, 400, 1600):
        times_seedseq = np.random.SeedSequence(entropy=107,
                                               spawn_key=(N,))
        rng = np.random.default_rng(times_seedseq)
        errs = []
        for _ in range(trials):
            times = generate_times((0.2, 1.0), N,
                                   t_start=REFERENCE_SETTLE_TIME, seed=rng)
            noise_seed = int(rng.integers(2 ** 62))
            samples = simulate_samples(plant, theta, np.zeros(4), gen,
                                       times, sigma, seed=noise_seed)
            fit = identify(plant, gen, samples)
            errs.append(np.sum((fit.theta - theta) ** 2))
        mse[N] = float(np.mean(errs))
    ratio1 = mse[100] / mse[400]
    ratio2 = mse[400] / mse[1600]
    elapsed = time.perf_counter() - start
    ok = (mse[100] > mse[400] > mse[1600]
          and 2.0 <= ratio1 <= 8.0 and 2.0 <= ratio2 <= 8.0
          and elapsed < 300.0)
    _report(7, ok,
            f"mean||e||^2 = {mse[100]:.3e} / {mse[400]:.3e} / "
            f"{mse[1600]:.3e} for N=100/400/1600; ratios "
            f"{ratio1:.2f}, {ratio2:.2f} (want [2, 8]); {elapsed:.0f}s")


def test_criterion_8_excitation_diagnostics():
    plant, gen, theta = (mass_spring_plant(), two_tone_generator(),
                         THETA_REFERENCE)
    times = generate_times((0.2, 1.0), 80, t_start=REFERENCE_SETTLE_TIME,
                           seed=108)
    samples = simulate_samples(plant, theta, np.zeros(4), gen, times, 0.0,
                               seed=None)
    fit = identify(plant, gen, samples, theta_ref=theta)
    rep = fit.excitation
    reference_ok = (rep.gzu_frr and rep.ubar_frr and rep.augmented_utilde_frr
                    and rep.fsN > 0 and rep.psi_fcr
                    and rep.identifiable_at_theta)

    # a plant whose z-channel never sees the input: G_zu = 0
    base = mass_spring_plant()
    dead = LftPlant(E=base.E, A_xx=base.A_xx,
                    B_xu=np.zeros_like(base.B_xu), B_xv=base.B_xv,
                    C_yx=base.C_yx, C_zx=np.zeros_like(base.C_zx),
                    D_zu=np.zeros_like(base.D_zu), D_zv=base.D_zv,
                    D_yu=base.D_yu, D_yv=base.D_yv, basis=base.basis,
                    theta_box=base.theta_box)
    dead_rep = check_excitation(dead, decompose(gen))
    necessity_ok = not dead_rep.gzu_frr

    e1 = np.eye(3)[:, [0]]
    e3 = np.eye(3)[:, [2]]
    degenerate = mass_spring_plant(basis=(e1, e1, e3))
    deg_samples = simulate_samples(degenerate, theta, np.zeros(4), gen,
                                   times, 0.0, seed=None)
    try:
        identify(degenerate, gen, deg_samples, theta_ref=theta)
        identifiability_ok = False
    except NotIdentifiableFromData:
        identifiability_ok = True
    reg = build_regression(degenerate, gen, deg_samples)
    est = estimate_tfm(reg)
    ps = build_parametric(degenerate, reg.spectrum, est, theta_ref=theta)
    deg_rep = check_excitation(degenerate, reg.spectrum, reg, ps)
    identifiability_ok = identifiability_ok and deg_rep.identifiable_at_theta is False
    _report(8, reference_ok and necessity_ok and identifiability_ok,
            f"reference diagnostics pass = {reference_ok}, zero-G_zu "
            f"necessity fails = {necessity_ok}, duplicated-basis "
            f"identifiability fails = {identifiability_ok}")


def test_criterion_9_baseline_comparison():
    start = time.perf_counter()
    plant, gen = mass_spring_plant(), two_tone_generator()
    sigma, N, trials = 0.25, 200, 100
    box = np.asarray(plant.theta_box, dtype=float)
    noise_floor = sigma ** 2
    ratios, prop_failures, dlse_failures, banded = [], 0, 0, []
    for ti in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=109, spawn_key=(ti,)))
        theta_true = np.array([rng.uniform(lo, hi) for lo, hi in box])
        pre = pre_settle_times((0.2, 1.0), REFERENCE_SETTLE_TIME, seed=rng)
        post = generate_times((0.2, 1.0), N, t_start=REFERENCE_SETTLE_TIME,
                              seed=rng)
        noise_seed = int(rng.integers(2 ** 62))
        dlse_seed = int(rng.integers(2 ** 62))
        all_times = np.concatenate([pre, post])
        samples_all = simulate_samples(plant, theta_true, np.zeros(4),
                                       gen, all_times, sigma,
                                       seed=noise_seed)
        post_samples = SampleSet(
            times=post, measurements=samples_all.measurements[len(pre):],
            noise_sigma=sigma, seed=noise_seed)
        try:
            fit = identify(plant, gen, post_samples)
            ere_prop = relative_error(theta_true, fit.theta)
        except Exception:
            prop_failures += 1
            continue
        dlse = dlse_fit(plant, gen, samples_all, box, seed=dlse_seed)
        if dlse.status == "numerical_failure":
            dlse_failures += 1
            continue
        if dlse.status == "converged" and dlse.cost <= 2.0 * noise_floor:
            ere_dlse = relative_error(theta_true, dlse.theta)
            ratios.append(ere_dlse / ere_prop)
            banded.append(abs(ere_dlse - ere_prop) /
                          max(ere_dlse, ere_prop))
    median_ratio = float(np.median(ratios))
    banded_ok = all(b < 1.0 for b in banded)
    elapsed = time.perf_counter() - start
    ok = (0.5 <= median_ratio <= 2.0 and prop_failures == 0 and banded_ok
          and len(ratios) >= trials // 2)
    _report(9, ok,
            f"{len(ratios)}/{trials} trials with near-floor DLSE; median "
            f"E_re(dlse)/E_re(proposed) = {median_ratio:.3f} (want "
            f"[0.5, 2]); proposed failures = {prop_failures}; DLSE "
            f"failures = {dlse_failures} (recorded); {elapsed:.0f}s")
