import numpy as np
import pytest

from cns_observer.analysis import estimate_decay
from cns_observer.observer import (
    FeedbackOperator,
    ObserverConfig,
    apply_feedback,
    observation_mask,
    run_pair,
)
from cns_observer.solver import FieldState, GridSpec, NonlinearModel
from cns_observer.spectral import ForcingSpec, KernelCoeffs, eigenvalues_closed_form

N = 64
X = (np.arange(N) + 0.5) / N


def vel_config(phi_u=5.0, phi_rho=0.0, **kw):
    return ObserverConfig(kernels=KernelCoeffs.uniform(phi_rho, phi_u), **kw)


def test_zero_mismatch_gives_zero_feedback(params):
    f_rho, f_u = apply_feedback(np.zeros(N), vel_config(5.0, 1.0), params)
    assert not np.any(f_rho) and not np.any(f_u)


def test_single_mode_feedback(params):
    w = np.sin(2 * np.pi * X)
    f_rho, f_u = apply_feedback(w, vel_config(5.0, 0.5), params)
    np.testing.assert_allclose(f_u, 5.0 * w, atol=1e-12)
    np.testing.assert_allclose(f_rho, 0.5 * 2 * np.pi * np.cos(2 * np.pi * X), atol=1e-12)


def test_density_observation_feedback(params):
    w = np.sin(2 * np.pi * X)
    cfg = ObserverConfig(kernels=KernelCoeffs.uniform(3.0, 0.2, target="density"), observed="density")
    f_rho, f_u = apply_feedback(w, cfg, params)
    np.testing.assert_allclose(f_rho, 3.0 * w, atol=1e-12)
    np.testing.assert_allclose(f_u, params.sound_speed2 * 0.2 * 2 * np.pi * np.cos(2 * np.pi * X), atol=1e-12)


def test_masked_feedback_spreads_to_other_modes(params):
    w = np.sin(2 * np.pi * X)
    cfg = vel_config(5.0, obs_length=0.5)
    _, f_u = apply_feedback(w, cfg, params)
    spec = np.abs(np.fft.rfft(f_u))
    assert spec[0] > 1e-3 * spec[1]
    assert spec[2] > 1e-3 * spec[1]
    np.testing.assert_allclose(f_u[X > 0.5], 0.0, atol=1e-12)


def test_mask_uses_cell_centres():
    m = observation_mask(GridSpec(10), 0.3)
    assert m.tolist() == [1, 1, 1] + [0] * 7
    assert observation_mask(GridSpec(10), 1.0).sum() == 10


def test_feedback_is_linear(params):
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(N), rng.standard_normal(N)
    op = FeedbackOperator(vel_config(4.0, 0.7, obs_length=0.6), params, GridSpec(N))
    fa, fb, fab = op(a), op(b), op(2.0 * a - 3.0 * b)
    for i in range(2):
        np.testing.assert_allclose(fab[i], 2.0 * fa[i] - 3.0 * fb[i], atol=1e-11)


def test_feedback_translation_equivariant(params):
    w = np.random.default_rng(4).standard_normal(N)
    op = FeedbackOperator(vel_config(4.0, 0.7), params, GridSpec(N))
    for a, b in zip(op(np.roll(w, 5)), op(w)):
        np.testing.assert_allclose(a, np.roll(b, 5), atol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        ObserverConfig(kernels=KernelCoeffs.zero("density"), observed="velocity")
    with pytest.raises(ValueError):
        vel_config(obs_length=0.0)
    with pytest.raises(ValueError):
        vel_config(density_feedback="global")
    with pytest.raises(ValueError):
        ObserverConfig(kernels=KernelCoeffs.zero("density"), observed="density", mean_correction=True)


@pytest.mark.parametrize("L", [0.3, 0.5, 0.8])
def test_divergence_form_conserves_mass(params, L):
    w = np.random.default_rng(5).standard_normal(N)
    f_rho, _ = apply_feedback(w, vel_config(2.0, 1.5, obs_length=L), params)
    assert abs(f_rho.sum()) < 1e-11


def test_localized_form_with_correction_has_zero_integral(params):
    w = np.random.default_rng(6).standard_normal(N)
    raw, _ = apply_feedback(w, vel_config(2.0, 1.5, obs_length=0.5, density_feedback="localized"), params)
    fixed, _ = apply_feedback(
        w, vel_config(2.0, 1.5, obs_length=0.5, density_feedback="localized", mean_correction=True), params
    )
    assert abs(raw.sum()) > 1e-3
    assert abs(fixed.sum()) < 1e-11
    np.testing.assert_allclose(fixed[X > 0.5], 0.0, atol=1e-12)


def test_mean_correction_noop_for_full_observation(params):
    w = np.random.default_rng(7).standard_normal(N)
    a = apply_feedback(w, vel_config(2.0, 1.5), params)
    b = apply_feedback(w, vel_config(2.0, 1.5, mean_correction=True), params)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)


def test_identical_states_stay_identical(params):
    g = GridSpec(50)
    s = FieldState.perturbed(g, 0.05, 1)
    run = run_pair(s, s.copy(), vel_config(5.0, 0.5), 0.2, params)
    assert np.all(run.err_rho == 0.0) and np.all(run.err_u == 0.0)


def test_observer_mass_constant(params):
    g = GridSpec(50)
    truth = FieldState.uniform(g)
    obs = FieldState.perturbed(g, 0.05, 1)
    run = run_pair(truth, obs, vel_config(5.0, 1.0, obs_length=0.5), 0.5, params)
    assert abs(run.mean_offset()) < 1e-13


def test_record_times(params):
    g = GridSpec(32)
    run = run_pair(FieldState.uniform(g), FieldState.perturbed(g, 0.05, 1), vel_config(), 0.1,
                   params, record_every=10)
    np.testing.assert_allclose(run.t, np.linspace(0, 0.1, 11), atol=1e-12)
    assert run.to_csv().splitlines()[0] == "t,err_rho,err_u"
    assert len(run.to_csv().splitlines()) == 12


def test_forcing_only_drives_truth(params):
    g = GridSpec(50)
    forcing = ForcingSpec.single(1, 1.0, 1.0)
    cfg = ObserverConfig(model="linear", forcing=forcing)
    run = run_pair(FieldState.uniform(g), FieldState.uniform(g), cfg, 0.5, params)
    assert np.all(run.observer.rho == 1.0) and not np.any(run.observer.u)
    assert np.max(np.abs(run.truth.u)) > 1e-3
    known = ObserverConfig(model="linear", forcing=forcing, forcing_known=True)
    run = run_pair(FieldState.uniform(g), FieldState.uniform(g), known, 0.5, params)
    assert np.all(run.err_u == 0.0)


@pytest.mark.parametrize("phi_u", [0.0, 5.0])
def test_linear_paired_run_matches_theory(params, phi_u):
    g = GridSpec(100)
    cfg = vel_config(phi_u, model="linear")
    run = run_pair(FieldState.uniform(g), FieldState.perturbed(g, 0.05, 1), cfg, 3.0, params)
    est = estimate_decay(run.t, run.err_rho)
    theory = eigenvalues_closed_form(params, KernelCoeffs.uniform(0.0, phi_u), 1)
    assert est.rate == pytest.approx(theory.decay_rate, rel=0.02)


def test_masked_run_matches_operator_spectrum(params):
    """Error decay of a half-observed observer equals the spectral abscissa of its Jacobian."""
    n = 64
    g = GridSpec(n)
    cfg = vel_config(10.0, 0.5, obs_length=0.5, reconstruction="central")
    op = FeedbackOperator(cfg, params, g)
    model = NonlinearModel(params, g, reconstruction="central")
    q0 = model.pack(FieldState.uniform(g))

    def tendency(q):
        f_rho, f_u = op(-model.velocity(q))
        return model.add_sources(model.rhs(q), q, f_rho, f_u).ravel()

    h = 1e-7
    jac = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        e = np.zeros(2 * n)
        e[j] = h
        e = e.reshape(2, n)
        jac[:, j] = (tendency(q0 + e) - tendency(q0 - e)) / (2 * h)
    ev = np.linalg.eigvals(jac)
    # the conserved mean density is a zero eigenvalue that the error never excites
    abscissa = -np.max(ev[np.abs(ev) > 1e-6].real)
    run = run_pair(FieldState.uniform(g), FieldState.perturbed(g, 0.05, 1), cfg, 5.0, params, record_every=5)
    est = estimate_decay(run.t, run.err_rho)
    assert est.rate == pytest.approx(abscissa, rel=0.02)
