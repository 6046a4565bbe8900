import math

import numpy as np
import pytest
from scipy import integrate

from heatflow.dataspace import Dataset
from heatflow.potential import (
    Kernel,
    PotentialField,
    SamplingGrid,
    _sum_kernels,
    eval_field,
    eval_potential,
    find_local_maxima,
    find_local_minima_1d,
    kernel_at,
)

HEAT = Kernel("gaussian", math.sqrt(2.0))  # exp(-x^2/4) profile


def test_heat_profile_peak():
    # exp(-x^2/4) normalized over R is 1/sqrt(4 pi)
    assert kernel_at(HEAT, 0.0, 1.0, 1) == pytest.approx(0.28209479177387814, rel=1e-14)


def test_prefactor_halves_at_t2():
    assert kernel_at(HEAT, 0.0, 2.0, 1) == pytest.approx(kernel_at(HEAT, 0.0, 1.0, 1) / 2)


@pytest.mark.parametrize("kernel", [Kernel(), HEAT, Kernel("exponential")])
def test_radial_decay(kernel):
    r = np.linspace(0, 20, 200)
    vals = kernel_at(kernel, r[:, None], 0.7, 1)
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-8


def test_nonpositive_time():
    with pytest.raises(ValueError, match="nonpositive time"):
        kernel_at(Kernel(), 0.0, 0.0)


@pytest.mark.parametrize("t", [0.05, 0.5, 5.0])
@pytest.mark.parametrize("kernel", [Kernel(), HEAT, Kernel("exponential")])
def test_unit_mass_1d(kernel, t):
    mass, _ = integrate.quad(lambda x: kernel_at(kernel, x, t, 1), -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("t", [0.05, 0.5, 5.0])
@pytest.mark.parametrize("kernel", [Kernel(), Kernel("exponential")])
def test_unit_mass_2d(kernel, t):
    half = 40.0 * kernel.std(t, 2)
    ax = np.linspace(-half, half, 1601)
    xx, yy = np.meshgrid(ax, ax, indexing="ij")
    vals = kernel_at(kernel, np.stack([xx, yy], axis=-1), t, 2)
    mass = integrate.trapezoid(integrate.trapezoid(vals, ax, axis=1), ax)
    assert mass == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("kernel", [Kernel(), HEAT])
def test_linear_spreading(kernel):
    def std(t):
        var, _ = integrate.quad(
            lambda x: x * x * kernel_at(kernel, x, t, 1), -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12
        )
        return math.sqrt(var)

    ratios = [std(t) / t for t in (0.1, 0.3, 1.0, 3.0, 10.0)]
    assert max(ratios) / min(ratios) - 1 < 1e-6
    assert ratios[0] == pytest.approx(kernel.std(1.0, 1), rel=1e-6)


def test_potential_single_point():
    ds = Dataset([0.0])
    assert eval_potential(ds, Kernel(), 0.3, 0.0) == pytest.approx(kernel_at(Kernel(), 0.0, 0.3))


def test_potential_symmetry():
    ds = Dataset([-1.0, -0.2, 0.2, 1.0])
    x = np.linspace(0, 2, 17)
    assert np.allclose(eval_potential(ds, Kernel(), 0.4, x), eval_potential(ds, Kernel(), 0.4, -x), rtol=0, atol=1e-15)


def test_potential_toy_small_t(toy):
    # separated bumps: each datapoint sees essentially only its own kernel
    vals = eval_potential(toy, Kernel(), 0.01, toy.points)
    assert np.allclose(vals, kernel_at(Kernel(), 0.0, 0.01) / 5, rtol=1e-6)


def test_potential_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        eval_potential(Dataset(np.zeros((2, 2))), Kernel(), 1.0, [0.0, 0.0, 0.0])


def test_potential_integrates_to_one():
    ds = Dataset([-0.3, 0.1, 0.8])
    mass, _ = integrate.quad(lambda x: eval_potential(ds, Kernel(), 0.2, x), -5, 5, points=[-0.3, 0.1, 0.8])
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_field_symmetric_about_point():
    ds = Dataset([0.5])
    grid = SamplingGrid([-1.5], [2.5], 101)
    f = eval_field(ds, Kernel(), 0.2, grid)
    assert np.allclose(f.values, f.values[::-1], rtol=1e-12, atol=0)


def test_field_refinement_shares_node_values(toy):
    coarse = SamplingGrid([-3.0], [3.0], 65)
    fine = SamplingGrid([-3.0], [3.0], 129)
    a = eval_field(toy, Kernel(), 0.3, coarse).values
    b = eval_field(toy, Kernel(), 0.3, fine).values[::2]
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_field_separable_matches_direct_sum():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(40, 2))
    grid = SamplingGrid.around(pts, 0.6, 48)
    f = eval_field(pts, Kernel(), 0.6, grid)
    direct = _sum_kernels(pts, Kernel(), 0.6, grid.nodes()).reshape(grid.shape)
    assert np.allclose(f.values, direct, rtol=1e-12, atol=1e-300)


def test_field_rejects_thin_margin(toy):
    with pytest.raises(ValueError, match="margin"):
        eval_field(toy, Kernel(), 1.0, SamplingGrid([-1.0], [1.0], 64))


def test_toy_field_unimodal_late(toy):
    grid = SamplingGrid.around(toy, Kernel().std(0.4), 1024)
    assert len(find_local_maxima(eval_field(toy, Kernel(), 0.4, grid))) == 1


def test_single_point_one_maximum_at_nearest_node():
    ds = Dataset([0.1234])
    grid = SamplingGrid.around(ds, 0.5, 257)
    m = find_local_maxima(eval_field(ds, Kernel(), 0.3, grid))
    ax = grid.axes[0]
    assert m.shape == (1, 1)
    assert m[0, 0] == ax[np.argmin(np.abs(ax - 0.1234))]


def test_toy_five_maxima_early(toy):
    grid = SamplingGrid.around(toy, Kernel().std(0.4), 1024)
    assert len(find_local_maxima(eval_field(toy, Kernel(), 0.01, grid))) == 5


def test_toy_three_maxima_two_minima(toy):
    grid = SamplingGrid.around(toy, Kernel().std(0.4), 1024)
    f = eval_field(toy, Kernel(), 0.15, grid)
    maxima = find_local_maxima(f)[:, 0]
    minima = find_local_minima_1d(f)
    assert len(maxima) == 3 and len(minima) == 2
    assert maxima[0] < minima[0] < maxima[1] < minima[1] < maxima[2]


def test_minima_unimodal_and_symmetric_pair():
    grid = SamplingGrid([-4.0], [4.0], 801)
    assert find_local_minima_1d(eval_field(Dataset([0.0]), Kernel(), 0.5, grid)).size == 0
    mins = find_local_minima_1d(eval_field(Dataset([-1.0, 1.0]), Kernel(), 0.2, grid))
    assert mins.size == 1 and abs(mins[0]) <= grid.spacing[0]


def test_plateau_counted_once():
    grid = SamplingGrid([0.0], [1.0], 20)
    v = np.zeros(20)
    v[5:9] = 2.0
    v[12] = 1.0
    maxima = find_local_maxima(PotentialField(grid, v, 1.0))[:, 0]
    assert maxima.tolist() == [grid.axes[0][5], grid.axes[0][12]]
    # zero plateau between the bumps is a single minimum
    minima = find_local_minima_1d(PotentialField(grid, v, 1.0))
    assert minima.tolist() == [grid.axes[0][9]]


def test_plateau_touching_border_ignored():
    grid = SamplingGrid([0.0], [1.0], 16)
    v = np.full(16, 3.0)
    v[8:] = np.linspace(2.0, 0.5, 8)
    assert find_local_maxima(PotentialField(grid, v, 1.0)).shape == (0, 1)


def test_constant_field_is_degenerate():
    grid = SamplingGrid([0.0, 0.0], [1.0, 1.0], 16)
    f = PotentialField(grid, np.ones((16, 16)), 1.0)
    assert f.is_constant and find_local_maxima(f).shape == (0, 2)


def test_2d_maxima_lexicographic():
    pts = np.array([[1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    grid = SamplingGrid.around(pts, 0.3, 96)
    m = find_local_maxima(eval_field(pts, Kernel(), 0.2, grid))
    assert m.shape == (3, 2)
    assert [tuple(r) for r in m] == sorted(tuple(r) for r in m)
    assert np.all(np.abs(np.sort(m, axis=0) - np.sort(pts, axis=0)) <= grid.spacing.max())


def test_minima_interleave_maxima_random():
    rng = np.random.default_rng(11)
    for _ in range(20):
        ds = Dataset(rng.uniform(-1, 1, rng.integers(2, 15)))
        grid = SamplingGrid.around(ds, 0.4, 1024)
        f = eval_field(ds, Kernel(), rng.uniform(0.02, 0.3), grid)
        maxima = find_local_maxima(f)[:, 0]
        minima = find_local_minima_1d(f)
        assert minima.size == maxima.size - 1
        assert np.all(maxima[:-1] < minima) and np.all(minima < maxima[1:])


def test_grid_size_limit():
    assert SamplingGrid.around(np.zeros((1, 4)) + np.arange(4), 1.0).shape == (32,) * 4
    with pytest.raises(ValueError, match="exceeds the limit"):
        SamplingGrid.around(np.zeros((1, 5)) + np.arange(5), 1.0)
