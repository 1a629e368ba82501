import numpy as np
import pytest

from oseenflow import GridSpec
from oseenflow.errors import CatalogError, DomainError
from oseenflow.fields import divergence_ratio, fft3
from oseenflow.oracles.manufactured import manufactured_case
from oseenflow.scenarios import (
    FORCING_FAMILIES,
    INITIAL_FAMILIES,
    forcing_function,
    gaussian_vortex_field,
    initial_field,
)


class TestInitialFamilies:
    @pytest.mark.parametrize("family", [f for f in INITIAL_FAMILIES if f != "raw"])
    def test_divergence_free(self, family):
        # sampled curls are spectrally solenoidal once box and spectrum are resolved
        g = GridSpec(6.0, 64)
        v = initial_field(g, family)
        assert divergence_ratio(g, fft3(v.data)) < 1e-12

    def test_vortex_is_centered_and_decaying(self):
        g = GridSpec(4.0, 32)
        mag = np.linalg.norm(gaussian_vortex_field(g, amplitude=1.0, sigma=0.5), axis=0)
        assert mag[0].max() < 1e-10 * mag.max()

    def test_raw_roundtrip(self, small_grid, tmp_path):
        data = gaussian_vortex_field(small_grid)
        path = tmp_path / "v.npy"
        np.save(path, data)
        assert np.array_equal(initial_field(small_grid, "raw", path=str(path)).data, data)

    def test_raw_shape_checked(self, small_grid, tmp_path):
        path = tmp_path / "v.npy"
        np.save(path, np.zeros((3, 4, 4, 4)))
        with pytest.raises(DomainError):
            initial_field(small_grid, "raw", path=str(path))

    def test_unknown(self, small_grid):
        with pytest.raises(CatalogError):
            initial_field(small_grid, "hill")

    def test_bad_axis(self, small_grid):
        with pytest.raises(DomainError):
            gaussian_vortex_field(small_grid, axis=(0, 0, 0))


class TestForcingFamilies:
    def test_zero_is_none(self, small_grid):
        assert forcing_function(small_grid, "zero") is None

    def test_modulated_vortex(self, small_grid):
        f = forcing_function(small_grid, "gaussian_vortex", amplitude=0.2, omega=np.pi, modulation=0.5)
        assert np.allclose(f(0.5), 1.5 * f(0.0))

    def test_manufactured_matches_case(self, small_grid):
        f = forcing_function(small_grid, "manufactured", nu=0.2, amplitude=0.3)
        case = manufactured_case("taylor_green_gaussian", nu=0.2, amplitude=0.3)
        assert np.allclose(f(0.4), case.forcing(small_grid, 0.4), rtol=0, atol=1e-15)

    def test_unknown(self, small_grid):
        assert "zero" in FORCING_FAMILIES
        with pytest.raises(CatalogError):
            forcing_function(small_grid, "wind")
