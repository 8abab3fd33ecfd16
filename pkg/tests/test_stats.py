"""Statistical machinery.

The p-value chain is implemented from scratch (continued-fraction
incomplete beta), so scipy.special / scipy.stats serve as the independent
oracle everywhere an oracle exists.
"""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from sensorank import stats
from sensorank.errors import DegenerateVariance, SingularDesign
from sensorank.fixtures import reference_records


# --------------------------------------------------------------------------
# special functions
# --------------------------------------------------------------------------


def test_incomplete_beta_matches_scipy():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(300):
        a, b = rng.uniform(0.1, 40.0, size=2)
        x = rng.uniform(0.0, 1.0)
        ours = stats.regularized_incomplete_beta(a, b, x)
        ref = scipy.special.betainc(a, b, x)
        worst = max(worst, abs(ours - ref))
    assert worst < 1e-12


def test_incomplete_beta_edges():
    assert stats.regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert stats.regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        stats.regularized_incomplete_beta(2.0, 3.0, 1.5)
    with pytest.raises(ValueError):
        stats.regularized_incomplete_beta(-1.0, 3.0, 0.5)


def test_t_two_sided_p_matches_scipy():
    for t in (0.0, 0.5, 1.96, 4.2, -2.5, 11.0):
        for df in (2, 5, 19, 100):
            ours = stats.t_two_sided_p(t, df)
            ref = 2.0 * scipy.stats.t.sf(abs(t), df)
            assert ours == pytest.approx(ref, rel=1e-10, abs=1e-300), (t, df)


def test_t_quantile_matches_scipy():
    for q in (0.6, 0.9, 0.975, 0.995):
        for df in (1, 4, 20, 60):
            assert stats.t_quantile(q, df) == pytest.approx(scipy.stats.t.ppf(q, df), abs=1e-8)


# --------------------------------------------------------------------------
# correlation
# --------------------------------------------------------------------------


def test_pearson_matches_scipy():
    rng = np.random.default_rng(1)
    for n in (3, 8, 21, 100):
        x = rng.standard_normal(n)
        y = 0.5 * x + rng.standard_normal(n)
        ours = stats.pearson(x, y)
        ref_r, ref_p = scipy.stats.pearsonr(x, y)
        assert ours.r == pytest.approx(ref_r, abs=1e-12)
        assert ours.p == pytest.approx(ref_p, rel=1e-8)
        assert ours.n == n


def test_pearson_perfect_correlation():
    x = np.arange(5.0)
    res = stats.pearson(x, 2.0 * x + 1.0)
    assert res.r == pytest.approx(1.0)
    assert res.p > 0.0  # floored at the smallest positive float, never 0


def test_pearson_guards():
    with pytest.raises(ValueError):
        stats.pearson([1.0, 2.0], [1.0, 2.0])           # n < 3
    with pytest.raises(DegenerateVariance):
        stats.pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_partial_correlation_matches_residual_pearson():
    rng = np.random.default_rng(2)
    n = 40
    z = rng.standard_normal(n)
    x = 0.8 * z + rng.standard_normal(n)
    y = -0.5 * z + rng.standard_normal(n)
    ours = stats.partial_correlation(x, y, z)

    # independent construction: correlate the OLS residuals, df = n - 3
    def residual(v):
        A = np.column_stack([np.ones(n), z])
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        return v - A @ coef

    r_ref, _ = scipy.stats.pearsonr(residual(x), residual(y))
    assert ours.r == pytest.approx(r_ref, abs=1e-10)
    t = r_ref * math.sqrt((n - 3) / (1 - r_ref**2))
    assert ours.p == pytest.approx(2.0 * scipy.stats.t.sf(abs(t), n - 3), rel=1e-8)


def test_partial_correlation_removes_confounder():
    rng = np.random.default_rng(3)
    z = rng.standard_normal(200)
    x = z + 0.1 * rng.standard_normal(200)
    y = z + 0.1 * rng.standard_normal(200)
    raw = stats.pearson(x, y).r
    partial = stats.partial_correlation(x, y, z).r
    assert raw > 0.9
    assert abs(partial) < 0.3


# --------------------------------------------------------------------------
# regression
# --------------------------------------------------------------------------


def test_ols_r2_matches_closed_form():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 2))
    y = X @ [1.5, -2.0] + 0.3 * rng.standard_normal(30)
    ours = stats.ols_r2(X, y)
    A = np.column_stack([np.ones(30), X])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ref = 1.0 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
    assert ours.r_squared == pytest.approx(ref, abs=1e-12)
    assert ours.coefficients == pytest.approx(coef, abs=1e-10)


def test_ols_r2_univariate_equals_pearson_squared():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(25)
    y = 0.7 * x + rng.standard_normal(25)
    assert stats.ols_r2(x[:, None], y).r_squared == pytest.approx(stats.pearson(x, y).r ** 2, abs=1e-12)


def test_ols_singular_design_rejected():
    x = np.ones(10)
    with pytest.raises(SingularDesign):
        stats.ols_r2(np.column_stack([x, 2 * x]), np.arange(10.0))


def test_loo_cv_r2_matches_hand_loop():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((15, 2))
    y = X @ [1.0, 0.5] + 0.5 * rng.standard_normal(15)
    ours = stats.loo_cv_r2(X, y)

    preds = []
    for i in range(15):
        mask = np.arange(15) != i
        A = np.column_stack([np.ones(14), X[mask]])
        coef, *_ = np.linalg.lstsq(A, y[mask], rcond=None)
        preds.append(np.concatenate([[1.0], X[i]]) @ coef)
    resid = y - np.asarray(preds)
    ref = 1.0 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
    assert ours == pytest.approx(ref, abs=1e-12)


def test_loo_cv_r2_can_go_negative():
    # one wild outlier makes held-out prediction worse than the mean
    x = np.array([0.0, 1.0, 2.0, 3.0, 100.0])
    y = np.array([0.0, 1.0, 2.0, 3.0, -100.0])
    assert stats.loo_cv_r2(x[:, None], y) < 0.0


# --------------------------------------------------------------------------
# robustness protocols
# --------------------------------------------------------------------------


def test_jackknife_counts_significant_folds():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(21)
    y = x + 0.2 * rng.standard_normal(21)   # strong signal: every fold significant
    retained, folds = stats.jackknife_significance(x, y, alpha=0.05)
    assert retained == 21 and len(folds) == 21
    noise = rng.standard_normal(21)
    retained_noise, _ = stats.jackknife_significance(noise, rng.standard_normal(21), alpha=0.05)
    assert retained_noise < 21


def test_jackknife_controlled_variant_uses_partial():
    rng = np.random.default_rng(8)
    z = rng.standard_normal(21)
    x = z + 0.05 * rng.standard_normal(21)
    y = z + 0.05 * rng.standard_normal(21)
    plain, _ = stats.jackknife_significance(x, y)
    controlled, folds = stats.jackknife_significance(x, y, control=z)
    assert plain == 21          # confounded signal looks solid
    assert controlled < plain   # controlling for z destroys it
    assert len(folds) == 21


def test_seed_stability_summary():
    values = [10.0, 10.5, 9.5, 10.2, 9.8]
    out = stats.seed_stability(values)
    assert out.mean == pytest.approx(np.mean(values))
    assert out.std == pytest.approx(np.std(values, ddof=1))
    assert out.cv == pytest.approx(out.std / out.mean)
    ref_ci = scipy.stats.t.ppf(0.975, 4) * out.std / math.sqrt(5)
    assert out.ci95 == pytest.approx(ref_ci, abs=1e-9)
    with pytest.raises(ValueError):
        stats.seed_stability([1.0])


# --------------------------------------------------------------------------
# model records
# --------------------------------------------------------------------------


def test_load_records_roundtrip(tmp_path):
    path = tmp_path / "models.csv"
    path.write_text(
        "model,arch,objective,g_pr,g_iso,l_iso,jer,disc,binding\n"
        "A,ViT,contrastive,0.1,0.9,0.8,20.0,70.0,40.0\n"
        "B,CNN,supervised,0.2,0.8,0.7,10.0,60.0,30.0\n"
    )
    records = stats.load_records(path)
    assert [r.name for r in records] == ["A", "B"]
    assert records[0].value("jer") == 20.0
    assert np.array_equal(stats.column(records, "binding"), [40.0, 30.0])


def test_load_records_merges_dims(tmp_path):
    path = tmp_path / "models.csv"
    path.write_text(
        "model,arch,objective,g_pr,g_iso,l_iso,jer,disc,binding\n"
        "A,ViT,contrastive,0.1,0.9,0.8,20.0,70.0,40.0\n"
    )
    dims = tmp_path / "dims.csv"
    dims.write_text("model,arch,embed_dim\nA,ViT,768\n")
    records = stats.load_records(path, dims)
    assert records[0].value("embed_dim") == 768.0
    with pytest.raises(KeyError):
        stats.column(stats.load_records(path), "embed_dim")


def test_reference_records_shape():
    records = reference_records()
    assert len(records) == 21
    assert len({(r.name, r.arch) for r in records}) == 21  # names repeat across archs
    binding = stats.column(records, "binding")
    assert binding.min() > 0.0 and binding.max() < 100.0
    dims = stats.column(records, "embed_dim")
    assert set(np.unique(dims)) <= {384.0, 512.0, 768.0, 1000.0, 1024.0, 2048.0}
    bare = reference_records(with_dims=False)
    with pytest.raises(KeyError):
        stats.column(bare, "embed_dim")
