import numpy as np
import pytest

from stackppc.comparisons import (CellPosterior, ComparisonError, HypotheticalProfile, build_profiles,
                                  contrast_gaps, focal_grid, gap_posterior, predict_cells, summarize)
from stackppc.dataset import Column, Dataset, generate_synthetic, quartile_bin
from stackppc.design import build_design
from stackppc.model import ModelSpec
from stackppc.sampler import PosteriorDraws, SamplerConfig, sample
from stackppc.stacking import stack_draws


def sorted_quantile(values, q):
    # independent type-7 oracle on a plain sorted list
    x = sorted(float(v) for v in values)
    h = q * (len(x) - 1)
    lo = int(h // 1)
    hi = min(lo + 1, len(x) - 1)
    return x[lo] + (h - lo) * (x[hi] - x[lo])


def _focal_data(rng, n=500):
    cols = {"y": Column("y", (rng.random(n) < 0.35).astype(float)),
            "FEM": Column("FEM", rng.integers(0, 2, n), ("0", "1")),
            "SES": Column("SES", rng.integers(0, 4, n), ("1", "2", "3", "4")),
            "X": Column("X", rng.normal(size=n))}
    return Dataset(cols, {"y": "outcome", "FEM": "focal", "SES": "focal", "X": "nonfocal"})


def test_grid_cells_and_sizes(rng):
    d = _focal_data(rng)
    g = focal_grid(d, ["FEM", "SES"])
    assert len(g.cells) == 8 and g.cells[0] == ("0", "1") and g.cells[-1] == ("1", "4")
    assert g.sizes.sum() == d.n
    single = focal_grid(d, ["FEM"])
    assert len(single.cells) == 2 and single.sizes.sum() == d.n


def test_grid_fractions_brute_force(rng):
    d = _focal_data(rng)
    g = focal_grid(d, ["FEM", "SES"])
    groups = {}
    for f, s, y in zip(d["FEM"].labels(), d["SES"].labels(), d.y):
        groups.setdefault((f, s), []).append(y)
    for cell, size, frac in g.rows():
        assert size == len(groups[cell])
        assert frac == sum(groups[cell]) / len(groups[cell])
    # sum rule
    assert float(np.sum(g.sizes * g.fractions)) / d.n == pytest.approx(d.y.mean(), rel=1e-15, abs=1e-15)


def test_grid_empty_cell(rng):
    d = _focal_data(rng).take(np.arange(40))
    d = d.take(np.flatnonzero(d["SES"].values != 2))
    g = focal_grid(d, ["FEM", "SES"])
    empty = ~g.defined
    assert empty.sum() == 2 and np.all(np.isnan(g.fractions[empty]))


def test_profiles_numeric():
    d = Dataset({"y": Column("y", np.zeros(100)), "X": Column("X", np.arange(1.0, 101.0))},
                {"y": "outcome", "X": "nonfocal"})
    assert [p.values["X"] for p in build_profiles(d, ["X"])] == [25.75, 50.5, 75.25]


def test_profiles_constant():
    d = Dataset({"y": Column("y", np.zeros(9)), "C": Column("C", np.full(9, 3.0))},
                {"y": "outcome", "C": "nonfocal"})
    assert [p.values["C"] for p in build_profiles(d, ["C"])] == [3.0, 3.0, 3.0]


def test_profiles_binary_bracketing():
    b = np.array([0.0] * 3 + [1.0] * 7)
    d = Dataset({"y": Column("y", np.zeros(10)), "B": Column("B", b),
                 "G": Column("G", (b == 1).astype(int), ("no", "yes"))},
                {"y": "outcome", "B": "nonfocal", "G": "nonfocal"})
    profs = build_profiles(d, ["B", "G"])
    assert [p.values["B"] for p in profs] == [0.0, 1.0, 1.0]
    assert [p.values["G"] for p in profs] == ["no", "yes", "yes"]


def _draws(B):
    B = np.asarray(B, dtype=float)
    S = B.shape[0]
    return PosteriorDraws(B, np.zeros(S, int), np.arange(S), tuple(f"b{j}" for j in range(B.shape[1])),
                          np.ones(1), np.ones((1, B.shape[1])), 0, 0, np.empty(0), np.empty(0), 0)


def test_zero_coefficients_give_half(rng):
    d = _focal_data(rng)
    specs = [ModelSpec.from_formula("y ~ FEM + SES + X", "m")]
    p = build_design(specs[0], d).p
    stacked = stack_draws([1.0], [_draws(np.zeros((50, p)))])
    grid = focal_grid(d, ["FEM", "SES"])
    cells = predict_cells(stacked, specs, d, grid, build_profiles(d, ["X"]))
    assert len(cells) == 24
    for c in cells:
        assert np.all(c.draws == 0.5) and c.median == c.q05 == c.q95 == 0.5


def test_missing_profile_variable(rng):
    d = _focal_data(rng)
    specs = [ModelSpec.from_formula("y ~ FEM + X", "m")]
    stacked = stack_draws([1.0], [_draws(np.zeros((10, 3)))])
    with pytest.raises(ComparisonError, match="lack variable 'X'"):
        predict_cells(stacked, specs, d, focal_grid(d, ["FEM"]), [HypotheticalProfile(0.5, {})])


@pytest.fixture(scope="module")
def monotone_cells():
    # all-negative coefficients: risk falls with SES and with the non-focal score
    d = generate_synthetic({"n": 1500, "intercept": 0.0, "predictors": [
        {"name": "FEM", "dist": "bernoulli", "categorical": True, "role": "focal", "coef": -0.6},
        {"name": "ESCS", "coef": -0.8},
        {"name": "READ", "coef": -0.7}]}, 21)
    d = quartile_bin(d, "ESCS", "SES", role="focal")
    specs = [ModelSpec.from_formula("y ~ FEM + SES + READ", "m")]
    draws = sample(build_design(specs[0], d), None, SamplerConfig(chains=2, warmup=300, draws=500, seed=2))
    stacked = stack_draws([1.0], [draws])
    grid = focal_grid(d, ["FEM", "SES"])
    return predict_cells(stacked, specs, d, grid, build_profiles(d, ["READ"])), grid


def test_cells_ordered_and_summaries(monotone_cells):
    cells, grid = monotone_cells
    assert [(c.cell, c.tag) for c in cells[:4]] == [
        (("0", "1"), 0.25), (("0", "1"), 0.5), (("0", "1"), 0.75), (("0", "2"), 0.25)]
    for c in cells:
        assert c.q05 <= c.median <= c.q95
        assert np.all((c.draws > 0) & (c.draws < 1))


def test_cells_monotone(monotone_cells):
    cells, _ = monotone_cells
    by = {(c.cell, c.tag): c for c in cells}
    for fem in ("0", "1"):
        for tag in (0.25, 0.5, 0.75):
            meds = [by[((fem, s), tag)].median for s in "1234"]
            assert all(a > b for a, b in zip(meds, meds[1:]))
        for s in "1234":
            m = [by[((fem, s), t)].median for t in (0.25, 0.5, 0.75)]
            assert m[0] >= m[1] >= m[2]


def test_gap_identity_and_shift(monotone_cells):
    cells, _ = monotone_cells
    same = gap_posterior(cells[0], cells[0])
    assert np.all(same.draws == 0.0) and same.median == 0.0
    S = 200
    a = CellPosterior(("0",), 0.5, np.full(S, 0.6), 0.6, 0.6, 0.6)
    b = CellPosterior(("1",), 0.5, np.full(S, 0.45), 0.45, 0.45, 0.45)
    assert gap_posterior(a, b).median == pytest.approx(0.15, abs=1e-15)
    with pytest.raises(ComparisonError):
        gap_posterior(a, CellPosterior(("1",), 0.25, np.full(S, 0.45), 0.45, 0.45, 0.45))


def test_gap_summaries_sort_oracle(monotone_cells):
    cells, _ = monotone_cells
    gaps = contrast_gaps(cells, ["FEM", "SES"], "FEM", "0", "1", 0.5)
    assert [g.label for g in gaps] == ["SES=1", "SES=2", "SES=3", "SES=4"]
    for g in gaps:
        assert g.median == sorted_quantile(g.draws, 0.5)
        assert g.q05 == sorted_quantile(g.draws, 0.05)
        assert g.q95 == sorted_quantile(g.draws, 0.95)
        assert np.all((g.draws > -1) & (g.draws < 1))
    # male (FEM=0) risk is higher in this DGP, so the default gap is positive
    assert all(g.median > 0 for g in gaps)


def test_gap_sign_conventions(monotone_cells):
    cells, _ = monotone_cells
    a = contrast_gaps(cells, ["FEM", "SES"], "FEM", "0", "1", 0.25)
    b = contrast_gaps(cells, ["FEM", "SES"], "FEM", "0", "1", 0.25, convention="formula")
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.draws, -y.draws)
    with pytest.raises(ComparisonError):
        contrast_gaps(cells, ["FEM", "SES"], "FEM", "0", "1", 0.25, convention="other")


def test_summarize_matches_oracle(rng):
    x = rng.random(101)
    assert summarize(x) == (sorted_quantile(x, 0.5), sorted_quantile(x, 0.05), sorted_quantile(x, 0.95))
