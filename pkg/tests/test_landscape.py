from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from lovqa import landscape as L
from lovqa import qubo
from lovqa.circuit import haar_random, random_params, sandwich, universal_mesh
from lovqa.fock import Statistics
from lovqa.io import read_csv


def oracle_of(f, num_params=1):
    return L.CostOracle(lambda t: f(t[0]), num_params)


def trig_poly(coeffs):
    """Real trig polynomial from complex c_k, k = -n..n."""
    s = L.FourierSpectrum((len(coeffs) - 1) // 2, coeffs)
    return lambda x: float(s(x)), lambda x: float(s(x, 1))


def random_coeffs(rng, n):
    pos = rng.normal(size=n) + 1j * rng.normal(size=n)
    return np.concatenate([np.conj(pos[::-1]), [rng.normal()], pos])


def test_cosine_coefficients():
    s = L.spectrum_of(np.cos, 1)
    assert s.c(1) == pytest.approx(0.5) and s.c(-1) == pytest.approx(0.5)
    assert abs(s.c(0)) < 1e-15


def test_constant_coefficients():
    s = L.spectrum_of(lambda x: 7.0, 3)
    assert s.c(0) == pytest.approx(7)
    assert np.all(np.abs(s.coeffs[s.ks != 0]) < 1e-14)
    assert s.is_constant


def test_sin2x_coefficients():
    s = L.spectrum_of(lambda x: np.sin(2 * x), 2)
    assert s.c(2) == pytest.approx(-0.5j)
    assert s.c(-2) == pytest.approx(np.conj(s.c(2)))


def test_sample_count_checked():
    with pytest.raises(ValueError):
        L.fourier_coefficients([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        L.fourier_coefficients([1.0, 2.0, 3.0], n=2)


def test_reality_of_spectrum(rng):
    f, _ = trig_poly(random_coeffs(rng, 3))
    s = L.spectrum_of(f, 3)
    np.testing.assert_allclose(s.coeffs, np.conj(s.coeffs[::-1]), atol=1e-12)


def test_psr_general_known_values():
    assert L.psr_gradient_general(oracle_of(np.sin), [0.0], 0, 1) == pytest.approx(1.0)
    assert L.psr_gradient_general(oracle_of(lambda x: np.sin(2 * x)), [0.0], 0, 2) == pytest.approx(2.0)


def test_psr_general_matches_analytic(rng):
    for _ in range(10):
        f, df = trig_poly(random_coeffs(rng, 2))
        x = rng.uniform(0, 2 * np.pi)
        assert abs(L.psr_gradient_general(oracle_of(f), [x], 0, 2) - df(x)) < 1e-9


def test_psr_general_costs_2n_evals():
    o = oracle_of(np.sin)
    L.psr_gradient_general(o, [0.3], 0, 3)
    assert o.evals == 6


def test_two_point_rule():
    a, phi, b = 1.7, 0.4, -2.0
    o = oracle_of(lambda x: a * np.sin(x - phi) + b)
    for x in (0.0, 1.0, 4.0):
        assert L.psr_gradient_two_point(o, [x], 0) == pytest.approx(a * np.cos(x - phi))
    assert L.psr_gradient_two_point(oracle_of(lambda x: 3.0), [1.0], 0) == 0
    assert o.evals == 6


def fermion_mesh_oracle(seed, n_modes=4, n=2):
    mesh = universal_mesh(n_modes)
    inst = qubo.random_instance(n_modes, seed)
    state = tuple([1] * n + [0] * (n_modes - n))
    return L.distribution_oracle(mesh, state, Statistics.FERMION, inst), mesh


def test_two_point_matches_finite_difference_on_fermions(rng):
    o, mesh = fermion_mesh_oracle(3)
    theta = random_params(mesh.num_params, rng)
    for j in (0, 5, 11):
        h = 1e-5
        fd = (o(L.set_param(theta, j, theta[j] + h)) - o(L.set_param(theta, j, theta[j] - h))) / (2 * h)
        assert abs(L.psr_gradient_two_point(o, theta, j) - fd) < 1e-6


def test_full_gradient_eval_count(rng):
    o, mesh = fermion_mesh_oracle(1)
    g = L.gradient(o, random_params(mesh.num_params, rng), 1)
    assert g.shape == (16,) and o.evals == 32
    o.reset()
    L.gradient(o, random_params(mesh.num_params, rng), 2)
    assert o.evals == 64


def test_slice_leaves_theta_alone(rng):
    o, mesh = fermion_mesh_oracle(2)
    theta = random_params(mesh.num_params, rng)
    before = theta.copy()
    pts = L.cost_slice(o, theta, 3, [0.0, 1.0])
    np.testing.assert_array_equal(theta, before)
    assert pts[0][0] == 0.0 and len(pts) == 2
    with pytest.raises(ValueError):
        L.cost_slice(o, theta, 16, [0.0])


def test_constant_oracle_slice():
    o = L.CostOracle(lambda t: 2.5, 2)
    assert [f for _, f in L.cost_slice(o, [0, 0], 1, [0, 1, 2])] == [2.5] * 3


def test_fermion_slice_is_one_sinusoid(rng):
    o, mesh = fermion_mesh_oracle(5)
    theta = random_params(mesh.num_params, rng)
    xs = np.linspace(0, 2 * np.pi, 25)
    fs = np.array([f for _, f in L.cost_slice(o, theta, 6, xs)])
    design = np.column_stack([np.sin(xs), np.cos(xs), np.ones_like(xs)])
    resid = fs - design @ np.linalg.lstsq(design, fs, rcond=None)[0]
    assert np.max(np.abs(resid)) < 1e-9


def test_boson_slice_has_no_power_above_n(rng):
    n = 2
    mesh = universal_mesh(4)
    o = L.distribution_oracle(mesh, (1, 1, 0, 0), Statistics.BOSON, qubo.random_instance(4, 7))
    s = L.slice_spectrum(o, random_params(16, rng), 4, 5)
    assert np.all(s.magnitudes()[n + 1:] < 1e-9)


def test_dvps_slice_is_single_harmonic_for_bosons():
    v, w = haar_random(3, 1), haar_random(3, 2)
    o = L.observable_oracle(sandwich(v, w, nonlinear=True), (2, 1, 0), "boson", lambda occ: occ[0] * occ[2])
    s = L.slice_spectrum(o, [0.0], 0, 3)
    assert s.support() == 1


def test_sine_stationary_points():
    pts = L.stationary_points(L.spectrum_of(np.sin, 1))
    assert len(pts) == 2
    kinds = {p.kind: p.x for p in pts}
    assert kinds["max"] == pytest.approx(np.pi / 2)
    assert kinds["min"] == pytest.approx(3 * np.pi / 2)


def test_cos2x_stationary_points():
    pts = L.stationary_points(L.spectrum_of(lambda x: np.cos(2 * x), 2))
    np.testing.assert_allclose([p.x for p in pts], np.arange(4) * np.pi / 2, atol=1e-9)
    assert [p.kind for p in pts] == ["max", "min", "max", "min"]


def test_constant_has_no_stationary_points():
    res = L.stationary_points(L.spectrum_of(lambda x: 1.0, 2))
    assert len(res) == 0 and res.constant


def test_random_polynomial_stationary_points(rng):
    grid = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    for _ in range(5):
        s = L.FourierSpectrum(3, random_coeffs(rng, 3))
        pts = L.stationary_points(s)
        assert 0 < len(pts) <= 6
        assert all(abs(s(p.x, 1)) < 1e-7 for p in pts)
        assert s(grid).min() >= pts.minimum().value - 1e-9


def test_eval_counter_is_thread_safe():
    o = L.CostOracle(lambda t: 0.0, 1)
    with ThreadPoolExecutor(8) as pool:
        list(pool.map(lambda _: [o([0.0]) for _ in range(200)], range(8)))
    assert o.evals == 1600


def test_sampled_oracle_is_seeded():
    mesh = universal_mesh(3)
    inst = qubo.random_instance(3, 1)
    make = lambda: L.distribution_oracle(mesh, (1, 1, 0), "boson", inst, shots=500, seed=4)
    theta = np.zeros(9)
    a, b = make(), make()
    assert [a(theta) for _ in range(3)] == [b(theta) for _ in range(3)]
    exact = L.distribution_oracle(mesh, (1, 1, 0), "boson", inst)(theta)
    assert abs(a(theta) - exact) < 2.0


def test_spectrum_csv(tmp_path):
    path = tmp_path / "s.csv"
    L.write_spectrum_csv(L.spectrum_of(np.cos, 1), path)
    header, rows = read_csv(path)
    assert header == ["k", "re_c", "im_c", "abs_c"] and len(rows) == 3
