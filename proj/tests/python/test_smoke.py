"""Smoke coverage of the Python surface: every exposed operation runs on a
small box and returns values consistent with the core's invariants."""

import math

import pytest

import gpslab


ALPHA = 1.5


@pytest.fixture(scope="module")
def kernel():
    return gpslab.kernel(ALPHA, t_max=2000)


@pytest.fixture(scope="module")
def tables(kernel):
    return gpslab.overlap_tables(kernel, 64)


def test_kernel_summary(kernel):
    assert kernel.alpha == ALPHA
    assert kernel.t_max == 2000
    assert kernel.norm > 0.0
    assert 2.0 < kernel.mu < 4.0
    # Persistence: (t - 1) K(t) sums to one; truncating at t_max leaves only
    # the polynomial tail, so the finite sum sits just below one.
    total = sum((t - 1) * kernel.K(t) for t in range(2, 2001))
    assert total < 1.0
    assert total == pytest.approx(1.0, abs=5e-4)


def test_free_partition_mass(kernel):
    # At beta = h = 0 the free partition sums renewal mass to exactly one.
    _, log_zf = gpslab.log_partition(kernel, 0.0, 0.0, 48, 48)
    assert log_zf == pytest.approx(0.0, abs=1e-9)


def test_disordered_partition_determinism(kernel):
    a = gpslab.log_partition(kernel, 0.5, 0.1, 24, 24, disorder="gaussian", seed=7)
    b = gpslab.log_partition(kernel, 0.5, 0.1, 24, 24, disorder="gaussian", seed=7)
    c = gpslab.log_partition(kernel, 0.5, 0.1, 24, 24, disorder="gaussian", seed=8)
    assert a == b
    assert a != c


def test_quenched_below_annealed(kernel):
    q = gpslab.quenched_free_energy(kernel, 0.5, 0.1, 64, replicas=8, seed=3)
    a = gpslab.annealed_free_energy(kernel, 0.5, 0.1, 64)
    assert len(q["replica_values"]) == 8
    se = q["ci95"] / 1.96
    assert q["mean"] <= a["log_EZ_over_N"] + 3.0 * se
    assert a["h_c_annealed"] == pytest.approx(-0.125)  # -log MGF at beta = 1/2


def test_overlap_tables_and_relevance(kernel, tables):
    assert tables.q_size == 64
    assert tables.U(0, 0) == 1.0
    assert tables.U(32, 32) >= tables.U(16, 16) >= 1.0
    assert 0.0 <= tables.tail(32) <= tables.tail(8) <= 1.0

    curve = gpslab.second_moment_curve(tables, "gaussian", 0.3, [8, 16, 32])
    assert all(v >= 1.0 for v in curve)
    assert curve == sorted(curve)

    # alpha > 1 keeps the intersection renewal persistent: no finite beta1.
    assert gpslab.beta1(tables, kernel, "gaussian") == (0.0, 0.0)

    n_beta, lower_only = gpslab.n_beta(tables, "gaussian", 0.3, 64)
    assert 1 <= n_beta <= 64


def test_certificate_runs_and_reports(kernel):
    h = -math.log(math.cosh(0.5)) + 1.0 / 8.0  # annealed critical point + gap
    r = gpslab.deloc_certificate(kernel, "rademacher", 0.5, h, 0.9, 8)
    assert r["gap"] == pytest.approx(1.0 / 8.0)
    assert r["k"] == 8
    assert r["rho_sum"] == pytest.approx(r["rho1"] + r["rho2"] + r["rho3"])
    assert r["certified"] == (r["rho_sum"] <= 1.0)


def test_certificate_refuses_inconsistent_scale(kernel):
    # gap * k beyond one contradicts the shift construction.
    with pytest.raises(ValueError):
        gpslab.deloc_certificate(kernel, "gaussian", 0.5, 0.5, 0.9, 64)


def test_contact_scaling():
    # Terminating-side sampling wants alpha < 1; contacts then grow like N^alpha.
    k = gpslab.kernel(0.5, t_max=2000)
    cs = gpslab.contact_scaling(k, [64, 128, 256], 1.0, n_paths=64, seed=11)
    assert cs["N"] == [64, 128, 256]
    assert all(m > 0 for m in cs["median"])
    assert cs["median"] == sorted(cs["median"])
    assert 0.2 < cs["slope"] < 0.8


def test_error_types_exposed(kernel, tables):
    with pytest.raises(gpslab.ConfigError):
        gpslab.kernel(1.5, family="bogus")
    with pytest.raises(gpslab.RangeError):
        tables.U(tables.q_size + 1, 0)
