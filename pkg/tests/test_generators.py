import numpy as np
import pytest

from alefx.models import GeneratorSpec, generate_synthetic


class TestGenerators:
    @pytest.mark.parametrize("seed", range(5))
    def test_example1_correlation(self, seed):
        d = generate_synthetic(GeneratorSpec("example1", n=200, seed=seed))
        assert d.n == 200 and d.columns == ("x1", "x2")
        assert np.corrcoef(d.values.T)[0, 1] > 0.95
        np.testing.assert_allclose(d.response, d.column(0) + d.column(1) ** 2)

    def test_example2_noise(self):
        d = generate_synthetic(GeneratorSpec("example2", n=10000, seed=0))
        resid = d.response - (d.column(0) + d.column(1) ** 2)
        assert abs(resid.std() - 0.1) <= 0.02

    def test_gaussian_independent(self):
        d = generate_synthetic(GeneratorSpec("gaussian-pair", n=100000, seed=0, rho=0.0))
        assert abs(np.corrcoef(d.values.T)[0, 1]) <= 0.02

    def test_gaussian_correlated(self):
        d = generate_synthetic(GeneratorSpec("gaussian-pair", n=100000, seed=0, rho=0.5))
        assert np.corrcoef(d.values.T)[0, 1] == pytest.approx(0.5, abs=0.01)
        np.testing.assert_allclose(d.values.std(axis=0), 1.0, atol=0.01)

    def test_product_cube(self):
        d = generate_synthetic(GeneratorSpec("product-cube", n=1000, seed=0, d=4))
        assert d.d == 4
        assert d.values.min() >= -1 and d.values.max() <= 1
        np.testing.assert_allclose(d.response, np.prod(d.values, axis=1))
        assert d.metadata["truth"] == "x1*x2*x3*x4"

    @pytest.mark.parametrize("family", ["example1", "example2", "gaussian-pair", "product-cube"])
    def test_reproducible_bytes(self, family):
        spec = GeneratorSpec(family, n=500, seed=42, rho=0.3)
        a, b = generate_synthetic(spec), generate_synthetic(spec)
        assert a.values.tobytes() == b.values.tobytes()
        assert a.response.tobytes() == b.response.tobytes()
        assert a.metadata["rng"] == "numpy.random.PCG64"
        c = generate_synthetic(GeneratorSpec(family, n=500, seed=43, rho=0.3))
        assert a.values.tobytes() != c.values.tobytes()

    def test_segment(self):
        d = generate_synthetic(GeneratorSpec("example1", n=2000, seed=1, segment=(2.0, 3.0), noise=0.0))
        assert d.values.min() >= 2.0 and d.values.max() <= 3.0

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_invalid_rho(self, rho):
        with pytest.raises(ValueError):
            generate_synthetic(GeneratorSpec("gaussian-pair", n=10, rho=rho))

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            generate_synthetic(GeneratorSpec("nope", n=10))
