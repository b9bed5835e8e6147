import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from synthdim.estimators import EnsembleSpectra, LevelStatistics, SpectralFormFactor
from synthdim.hamiltonian import ModelParams
from synthdim.spectral import DisorderEnsemble, r_statistic_ensemble, sff_exact


PARAMS = ModelParams(7, 2, hop_strengths=(1, 1.25, 1.25), interaction=1.5)
ENS = DisorderEnsemble(0.3, 4, seed=1)


def test_params_and_clone():
    est = LevelStatistics(window=0.6)
    assert est.get_params() == {"window": 0.6, "degeneracy_tol": None}
    assert clone(est).set_params(window=0.5).window == 0.5
    assert EnsembleSpectra(ensemble=ENS).get_params()["ensemble"] is ENS


def test_pipeline_matches_functional_core():
    pipe = Pipeline([("eig", EnsembleSpectra(ensemble=ENS, n_jobs=1)), ("r", LevelStatistics())])
    pipe.fit([PARAMS])
    ref = r_statistic_ensemble(PARAMS, ENS, n_jobs=1)
    assert pipe.named_steps["r"].mean_r_ == pytest.approx(ref.mean_r, abs=1e-14)
    assert pipe.predict([PARAMS])[0] == pipe.named_steps["r"].classification_
    assert pipe.transform([PARAMS]).shape == (4, 1)


def test_level_statistics_on_plain_spectra():
    est = LevelStatistics(window=1.0).fit([np.arange(10.0)])
    assert est.mean_r_ == pytest.approx(1.0)
    assert est.stderr_ == 0.0
    with pytest.raises(Exception):
        LevelStatistics(window=1.5).fit([np.arange(10.0)])


def test_sff_estimator():
    spectra = EnsembleSpectra(ensemble=ENS, n_jobs=1).transform([PARAMS])
    t = np.geomspace(0.01, 10, 12)
    est = SpectralFormFactor(times=t).fit(spectra)
    np.testing.assert_allclose(est.values_, sff_exact(PARAMS, ENS, t, n_jobs=1).values, atol=1e-14)
    np.testing.assert_allclose(est.predict(t), est.values_)
    assert est.theory("GUE").shape == t.shape
    with pytest.raises(NotFittedError):
        SpectralFormFactor().predict(t)
