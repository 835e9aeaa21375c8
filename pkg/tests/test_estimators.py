import numpy as np
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from metashield import LayoutDesigner, MetamaterialAnonymizer, MFCCEmbedder
from metashield.evaluation import embed
from metashield.perturb import AudioClip, anonymize


def test_pipeline_composes():
    rng = np.random.default_rng(3)
    xs = [0.05 * rng.standard_normal(8000) for _ in range(3)]
    pipe = Pipeline([("anon", MetamaterialAnonymizer(seed=10)), ("embed", MFCCEmbedder())])
    out = pipe.fit_transform(xs)
    assert out.shape == (3, 26)
    expected = embed(anonymize(AudioClip(xs[2], 16000), seed=12).samples)
    assert np.allclose(out[2], expected)
    pipe.set_params(anon__coupling=0.0)
    same = pipe.fit_transform(xs)
    assert np.allclose(same[0], embed(xs[0]), atol=1e-6)


def test_clone_preserves_params():
    for est in (LayoutDesigner(max_units=2, aggregate="min"),
                MetamaterialAnonymizer(coupling=10.0, hop=256),
                MFCCEmbedder(n_mfcc=12)):
        twin = clone(est)
        assert twin is not est
        assert twin.get_params() == est.get_params()
        assert not any(k.endswith("_") for k in vars(twin))
