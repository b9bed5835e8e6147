import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthdim.exceptions import DegenerateSpectrumError, DomainError, TooFewLevelsError
from synthdim.hamiltonian import ModelParams
from synthdim.spectral import (
    CLEAN,
    DisorderEnsemble,
    classify_r,
    diagonalize,
    ensemble_spectra,
    heisenberg_time,
    r_statistic,
    r_statistic_ensemble,
    sff_exact,
    sff_from_spectra,
    sff_theory,
)


def goe(rng, d):
    a = rng.normal(size=(d, d))
    return (a + a.T) / 2


def test_diagonalize_examples():
    s = diagonalize(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(s.eigenvalues, [-1, 1], atol=1e-15)
    s = diagonalize(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_allclose(s.eigenvalues, [-1, 2, 3])
    np.testing.assert_allclose(np.abs(s.eigenvectors), np.eye(3)[:, [1, 2, 0]])
    rng = np.random.default_rng(0)
    h = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = h + h.conj().T
    s = diagonalize(h)
    assert np.max(np.abs(h @ s.eigenvectors - s.eigenvectors * s.eigenvalues)) < 1e-9


def test_diagonalize_rejects_non_square():
    with pytest.raises(DomainError):
        diagonalize(np.zeros((2, 3)))


def test_equal_spacing():
    res = r_statistic([0, 1, 2, 3, 4], window=1.0)
    assert res.mean_r == pytest.approx(1.0)
    assert res.n_degenerate_dropped == 0


def test_poisson_constant():
    rng = np.random.default_rng(1)
    levels = np.cumsum(rng.exponential(size=100_000))
    res = r_statistic(levels, window=1.0)
    assert res.mean_r == pytest.approx(2 * np.log(2) - 1, abs=0.005)
    assert res.classification == "integrable"


def test_goe_constant():
    rng = np.random.default_rng(2)
    vals = [r_statistic(np.linalg.eigvalsh(goe(rng, 200))).mean_r for _ in range(50)]
    assert np.mean(vals) == pytest.approx(0.5307, abs=0.01)
    assert classify_r(np.mean(vals)) == "GOE"


def test_classification_labels():
    assert classify_r(0.60) == "GUE"
    assert classify_r(0.39) == "integrable"
    assert classify_r(0.46) == "intermediate"


def test_degenerate_spectrum_refused():
    with pytest.raises(DegenerateSpectrumError):
        r_statistic([0, 0, 0, 0, 1, 1, 1, 1], window=1.0)
    with pytest.raises(TooFewLevelsError):
        r_statistic([0, 1, 2])


def test_degenerate_pairs_dropped_and_counted():
    e = np.concatenate([np.arange(20.0), [5.0]])
    res = r_statistic(e, window=1.0)
    assert res.n_degenerate_dropped == 1


@pytest.mark.property
@given(a=st.floats(0.01, 100), b=st.floats(-100, 100), seed=st.integers(0, 10**6))
def test_r_affine_invariance(a, b, seed):
    e = np.linalg.eigvalsh(goe(np.random.default_rng(seed), 40))
    r0 = r_statistic(e).mean_r
    assert abs(r_statistic(a * e + b).mean_r - r0) < 1e-12


def test_disorder_reproducible_and_bounded():
    ens = DisorderEnsemble(amplitude=0.3, realizations=5, seed=9)
    f = ens.fields(3, 21)
    np.testing.assert_array_equal(f, ens.fields(3, 21))
    assert np.all(np.abs(f) <= 0.15)
    assert not np.allclose(f, ens.fields(4, 21))
    np.testing.assert_array_equal(CLEAN.fields(0, 5), 0)


def test_ensemble_parallel_matches_serial():
    params = ModelParams(6, 2, hop_strengths=(1, 0.5), interaction=1.0)
    ens = DisorderEnsemble(0.3, 4, seed=3)
    a = ensemble_spectra(params, ens, n_jobs=1)
    b = ensemble_spectra(params, ens, n_jobs=2)
    np.testing.assert_array_equal(np.asarray(a), np.asarray(b))
    res = r_statistic_ensemble(params, ens, n_jobs=1)
    assert res.n_realizations == 4


def test_sff_two_level():
    e = [0.0, np.pi]
    np.testing.assert_allclose(sff_from_spectra([e], [0.0, 1.0, 2.0]), [1.0, 0.0, 1.0], atol=1e-15)


def test_sff_exact_starts_at_one():
    params = ModelParams(5, 2, hop_strengths=(1, 0.3), interaction=1.0)
    curve = sff_exact(params, DisorderEnsemble(0.3, 3, seed=0), [0.0, 0.5])
    assert curve.values[0] == pytest.approx(1.0)
    assert curve.dim == 15


@pytest.mark.property
@given(b=st.floats(-50, 50), seed=st.integers(0, 10**6))
def test_sff_shift_invariance(b, seed):
    e = np.linalg.eigvalsh(goe(np.random.default_rng(seed), 30))
    t = np.linspace(0, 5, 17)
    np.testing.assert_allclose(sff_from_spectra([e + b], t), sff_from_spectra([e], t), atol=1e-12)


def test_heisenberg_time():
    assert heisenberg_time([0, 1, 2, 3]) == pytest.approx(2 * np.pi)
    with pytest.raises(DomainError):
        heisenberg_time([1, 1])


@pytest.mark.parametrize("kind", ["GOE", "GUE"])
def test_theory_small_t(kind):
    assert sff_theory(kind, 100, 1.0, [1e-9]).values[0] == pytest.approx(1.0, abs=1e-6)


def test_theory_gue_examples():
    d = 100
    assert sff_theory("GUE", d, 1.0, [2.0]).values[0] == pytest.approx(0.01, rel=0.01)
    d = 10_000
    assert sff_theory("GUE", d, 1.0, [0.5]).values[0] == pytest.approx(0.5 / d, rel=0.01)


def test_theory_plateau_and_ramp():
    from scipy.special import j1

    d, th = 50, 3.0
    t = np.array([1.5 * th, 4 * th])
    gue = sff_theory("GUE", d, th, t).values
    x = 4 * d * t / th
    np.testing.assert_allclose(gue, (2 * j1(x) / x) ** 2 + 1 / d, rtol=1e-13)
    ramp_t = [0.3 * th]
    assert sff_theory("GOE", d, th, ramp_t).values[0] != pytest.approx(sff_theory("GUE", d, th, ramp_t).values[0])
    late = sff_theory("GOE", d, th, [1e3 * th]).values[0]
    assert late == pytest.approx(1 / d, rel=1e-3)


def test_theory_validation():
    with pytest.raises(DomainError):
        sff_theory("XYZ", 10, 1.0, [1.0])
    with pytest.raises(DomainError):
        sff_theory("GOE", 10, 1.0, [0.0])
