import numpy as np
import pytest

from kpnw.spectral import Field, make_grid, project_admissible


def gaussian_derivative(grid, s=1.0):
    """``d/dx exp(-s (x^2 + y^2))`` sampled on ``grid``."""
    X, Y = grid.mesh()
    return Field(grid, -2.0 * s * X * np.exp(-s * (X**2 + Y**2)))


def three_lobe(grid, s=0.5, c=6.0):
    """``g(x - c) - 2 g(x) + g(x + c)`` with ``g`` a Gaussian.

    Rows have zero mean and zero first x-moment, so the periodic
    antiderivative is localized, and the sign changes sit where the field is
    exponentially small (no kinks in ``|u|^q`` that the rectangle rule sees).
    """
    X, Y = grid.mesh()
    g = lambda x: np.exp(-s * (x**2 + Y**2))  # noqa: E731
    return project_admissible(Field(grid, g(X - c) - 2.0 * g(X) + g(X + c)))


def random_smooth(grid, rng, width=6.0, amp=1.0):
    """Random admissible field with a Gaussian spectral envelope."""
    c = rng.standard_normal((grid.ny, grid.nx // 2 + 1)) + 1j * rng.standard_normal((grid.ny, grid.nx // 2 + 1))
    k2 = grid._kx_half**2 + grid._ky_half**2
    c *= np.exp(-k2 * width)
    v = np.fft.irfft2(c * grid.admissible_mask, s=grid.shape)
    X, Y = grid.mesh()
    v = v * np.exp(-(X**2 + Y**2) / (0.05 * grid.Lx * grid.Ly))
    u = project_admissible(Field(grid, v))
    return Field(grid, amp * u.values / np.abs(u.values).max())


@pytest.fixture(scope="session")
def grid128():
    return make_grid(128, 128, 40.0, 40.0)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64, 64, 40.0, 40.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
