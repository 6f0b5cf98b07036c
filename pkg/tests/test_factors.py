import json
import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from rppgbench._special import betainc, f_sf, student_t_ppf, student_t_sf
from rppgbench.errors import InvariantViolation, SingularDesign, TooFewObservations, UnknownColumn
from rppgbench.factors import BUCKET_HEADER, DesignMatrix, bucket_analysis, build_design, fit_ols
from rppgbench.metrics import ChunkMetrics

from ols_oracle import compare, ols_oracle, random_problem


def design(*cols, names=None):
    cols = [np.asarray(c, dtype=float) for c in cols]
    n = len(cols[0])
    names = names or [f"x{i}" for i in range(1, len(cols) + 1)]
    return DesignMatrix(np.column_stack([np.ones(n)] + cols), ("intercept", *names))


def _X(X):
    return DesignMatrix(X, ("intercept", *[f"x{i}" for i in range(1, X.shape[1])]))


def test_exact_fit():
    x = np.arange(12.0)
    rep = fit_ols(design(x), 3 + 2 * x)
    assert rep["intercept"].coef == pytest.approx(3.0, abs=1e-12)
    assert rep["x1"].coef == pytest.approx(2.0, abs=1e-12)
    assert rep.r_squared == 1.0
    assert rep.rss == 0.0


def test_intercept_only():
    y = np.array([1.0, 4.0, 2.0, 7.0, 5.0])
    rep = fit_ols(DesignMatrix(np.ones((5, 1)), ("intercept",)), y)
    assert rep["intercept"].coef == pytest.approx(y.mean(), abs=1e-12)
    assert rep.r_squared == 0.0
    assert math.isnan(rep.f_statistic)


def test_random_50x4_against_oracle():
    rng = np.random.default_rng(50)
    X, y = random_problem(rng, n=50, p=4)
    compare(fit_ols(_X(X), y), ols_oracle(X, y), 1e-8)


def test_oracle_agrees_with_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    rng = np.random.default_rng(8)
    X, y = random_problem(rng, n=120, p=5)
    res = sm.OLS(y, X).fit()
    rep = fit_ols(_X(X), y)
    np.testing.assert_allclose([c.coef for c in rep.coefficients], res.params, rtol=1e-9)
    np.testing.assert_allclose([c.std_err for c in rep.coefficients], res.bse, rtol=1e-9)
    np.testing.assert_allclose([c.p_value for c in rep.coefficients], res.pvalues, rtol=1e-7)
    ci = res.conf_int()
    np.testing.assert_allclose([c.ci_lo for c in rep.coefficients], ci[:, 0], rtol=1e-9)
    for ours, theirs in [(rep.r_squared, res.rsquared), (rep.adj_r_squared, res.rsquared_adj),
                         (rep.f_statistic, res.fvalue), (rep.prob_f, res.f_pvalue),
                         (rep.aic, res.aic), (rep.bic, res.bic), (rep.log_likelihood, res.llf)]:
        assert ours == pytest.approx(theirs, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_residuals_orthogonal(seed):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng, n=60)
    rep = fit_ols(_X(X), y)
    beta = np.array([c.coef for c in rep.coefficients])
    assert np.all(np.abs(X.T @ (y - X @ beta)) < 1e-8 * np.linalg.norm(y))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
@example(seed=323)
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng, n=80)
    perm = rng.permutation(80)
    a, b = fit_ols(_X(X), y), fit_ols(_X(X[perm]), y[perm])
    da, db = a.to_dict(), b.to_dict()
    for ca, cb in zip(da.pop("coefficients"), db.pop("coefficients")):
        # CI bounds can sit near zero, so tolerances follow the coefficient's scale
        scale = abs(ca["coef"]) + 2 * ca["std_err"]
        for k in ("coef", "std_err", "ci_lo", "ci_hi"):
            assert ca[k] == pytest.approx(cb[k], rel=1e-12, abs=1e-12 * scale)
        assert ca["t"] == pytest.approx(cb["t"], rel=1e-12, abs=1e-12)
        # the t tail amplifies relative error in t by about |d ln p / d ln t|
        t, df = ca["t"], da["df_resid"]
        cond = 1 + (df + 1) * t * t / (df + t * t)
        assert ca["p_value"] == pytest.approx(cb["p_value"], rel=1e-12 * cond, abs=1e-300)
    for k in da:
        if k == "prob_f":
            # same amplification for the F tail, bounded by (d1 + d2) / 2
            cond = 1 + (da["df_model"] + da["df_resid"]) / 2
            assert da[k] == pytest.approx(db[k], rel=1e-12 * cond, abs=1e-300)
        elif isinstance(da[k], float):
            assert da[k] == pytest.approx(db[k], rel=1e-12, abs=1e-300)
        else:
            assert da[k] == db[k]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_r2_equals_squared_correlation(seed):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng, n=70)
    rep = fit_ols(_X(X), y)
    fitted = X @ np.array([c.coef for c in rep.coefficients])
    assert rep.r_squared == pytest.approx(np.corrcoef(y, fitted)[0, 1] ** 2, abs=1e-10)


def test_duplicate_column_singular():
    x = np.random.default_rng(1).normal(size=30)
    with pytest.raises(SingularDesign) as e:
        fit_ols(design(x, x.copy(), names=["a", "b"]), x)
    assert set(e.value.columns) == {"a", "b"}


def test_near_collinear_singular():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(2, 40))
    with pytest.raises(SingularDesign) as e:
        fit_ols(design(a, b, a + 2 * b, names=["a", "b", "c"]), a)
    assert set(e.value.columns) == {"a", "b", "c"}


def test_constant_column_singular():
    with pytest.raises(SingularDesign) as e:
        design(np.full(10, 3.0), names=["k"])
    assert e.value.columns == ["k", "intercept"]


def test_design_validation():
    with pytest.raises(TooFewObservations):
        design([1.0, 2.0])
    with pytest.raises(InvariantViolation):
        DesignMatrix(np.ones((5, 2)) * [2, 1], ("intercept", "x"))


def test_sign_recovery():
    rng = np.random.default_rng(6)
    movement = rng.uniform(0, 0.3, 150)
    y = 5 - 14 * movement + rng.normal(0, 1, 150)
    rep = fit_ols(design(movement, names=["movement"]), y)
    assert rep["movement"].coef < 0 and rep["movement"].p_value < 0.05


def test_t_sf_examples():
    assert student_t_sf(0.0, 3.0) == 0.5
    assert student_t_sf(0.0, 1e4) == 0.5
    assert student_t_sf(1.96, 1e4) == pytest.approx(0.025, abs=5e-4)
    assert student_t_sf(2.228, 10) == pytest.approx(0.025, abs=1e-3)


def _t_pdf(x, df):
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    return c * (1 + x * x / df) ** (-(df + 1) / 2)


@pytest.mark.parametrize("t,df", [(1.96, 1e4), (2.228, 10), (0.7, 3), (-1.3, 25), (4.0, 7)])
def test_t_sf_numeric_integration(t, df):
    tail, _ = integrate.quad(_t_pdf, t, np.inf, args=(df,), epsabs=1e-14, epsrel=1e-12)
    assert student_t_sf(t, df) == pytest.approx(tail, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.05, 200), b=st.floats(0.05, 200), x=st.floats(0, 1))
def test_betainc_against_mpmath(a, b, x):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    want = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert betainc(a, b, x) == pytest.approx(want, rel=1e-10, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(f=st.floats(0.0, 50), d1=st.integers(1, 20), d2=st.integers(1, 300))
def test_f_sf_against_mpmath(f, d1, d2):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    F = mpmath.mpf(f)
    want = float(mpmath.betainc(d2 / mpmath.mpf(2), d1 / mpmath.mpf(2), 0, d2 / (d2 + d1 * F), regularized=True))
    assert f_sf(f, d1, d2) == pytest.approx(want, rel=1e-10, abs=1e-14)


def test_f_sf_matches_scipy_away_from_zero():
    for f, d1, d2 in [(0.5, 3, 40), (2.7, 5, 100), (10.0, 1, 7)]:
        assert f_sf(f, d1, d2) == pytest.approx(stats.f.sf(f, d1, d2), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.001, 0.999), df=st.integers(1, 500))
def test_t_ppf_inverts_sf(q, df):
    t = student_t_ppf(q, df)
    assert 1 - student_t_sf(t, df) == pytest.approx(q, abs=1e-12)


def _row(**kw):
    base = {"age": "30", "gender_male": "true", "skin_type": "3", "movement": "0.1", "hr": "70"}
    base.update(kw)
    return base


def test_build_design_dummies_and_bools():
    rows = [_row(skin_type=str(s), gender_male=str(s % 2 == 0).lower(), age=str(20 + s * 3 % 7))
            for s in [1, 2, 3, 4, 5, 6] * 3]
    X = build_design(rows, ["age", "gender_male", "skin_type"])
    assert X.names == ("intercept", "age", "gender_male", *[f"skin_type_{k}" for k in range(2, 7)])
    assert X.values[:, 2].tolist() == [float(s % 2 == 0) for s in [1, 2, 3, 4, 5, 6] * 3]
    assert X.values[:6, 3:].tolist() == np.vstack([np.zeros(5), np.eye(5)]).tolist()


def test_build_design_only_present_levels():
    rows = [_row(skin_type=str(s), age=str(a)) for s, a in [(1, 20), (3, 30), (3, 41), (1, 33), (1, 25)]]
    assert build_design(rows, ["skin_type", "age"]).names == ("intercept", "skin_type_3", "age")


def test_build_design_errors():
    rows = [_row(age=str(a)) for a in range(10)]
    with pytest.raises(UnknownColumn):
        build_design(rows, ["height"])
    with pytest.raises(SingularDesign) as e:
        build_design(rows, ["age", "age"])
    assert e.value.columns == ["age", "age"]
    assert "age" in str(e.value)


def test_report_serialization():
    rng = np.random.default_rng(3)
    X, y = random_problem(rng, n=40, p=3)
    rep = fit_ols(_X(X), y, dep_variable="pulse_snr")
    d = json.loads(rep.to_json())
    assert [c["name"] for c in d["coefficients"]] == ["intercept", "x1", "x2"]
    assert d["dep_variable"] == "pulse_snr" and d["n_obs"] == 40
    text = rep.summary()
    for label in ("coef", "std err", "P>|t|", "[0.025", "0.975]", "R-squared:", "AIC:", "BIC:", "Df Model:"):
        assert label in text


def _metrics(p, r=None):
    return ChunkMetrics(hr_ae=0.0, pulse_snr=p, pulse_r=0.0, rr_ae=None, resp_snr=r, resp_r=None)


def test_buckets_single_bin_global_mean():
    vals = [1.0, 2.0, 6.0]
    rep = bucket_analysis([(0.5, _metrics(v, v)) for v in vals], [0, 1])
    assert len(rep.buckets) == 1
    b = rep.buckets[0]
    assert b.pulse_snr_mean == pytest.approx(3.0) and b.n == 3
    assert b.pulse_snr_sd == pytest.approx(np.std(vals))


def test_buckets_single_observations_and_empty():
    rep = bucket_analysis([(0.1, _metrics(4.0)), (0.6, _metrics(2.0))], [0, 0.5, 1.0, 2.0])
    assert [b.pulse_snr_sd for b in rep.buckets[:2]] == [0.0, 0.0]
    assert rep.buckets[2].n == 0 and rep.buckets[2].pulse_snr_mean is None
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(BUCKET_HEADER)
    assert lines[3].endswith(",,,,,0")


def test_buckets_edges_and_closure():
    rep = bucket_analysis([(1.0, _metrics(1.0)), (0.0, _metrics(2.0))], [0, 0.5, 1.0])
    assert [b.n for b in rep.buckets] == [1, 1]
    assert [b.label for b in rep.buckets] == ["[0, 0.5)", "[0.5, 1]"]
    with pytest.raises(InvariantViolation):
        bucket_analysis([], [0, 0])
    with pytest.raises(InvariantViolation):
        bucket_analysis([(2.0, _metrics(1.0))], [0, 1])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_buckets_brute_force(seed):
    rng = np.random.default_rng(seed)
    edges = np.sort(rng.choice(np.linspace(0, 1, 21), size=int(rng.integers(2, 7)), replace=False))
    vals = rng.uniform(edges[0], edges[-1], 60)
    p = rng.normal(0, 5, 60)
    r = np.where(rng.random(60) < 0.3, np.nan, rng.normal(0, 5, 60))
    obs = [(v, _metrics(a, None if np.isnan(b) else b)) for v, a, b in zip(vals, p, r)]
    rep = bucket_analysis(obs, edges)
    for k, bkt in enumerate(rep.buckets):
        last = k == len(rep.buckets) - 1
        members = [i for i, v in enumerate(vals) if edges[k] <= v and (v < edges[k + 1] or (last and v <= edges[k + 1]))]
        assert bkt.n == len(members)
        if members:
            assert bkt.pulse_snr_mean == pytest.approx(np.mean(p[members]), abs=1e-12)
            assert bkt.pulse_snr_sd == pytest.approx(np.std(p[members]), abs=1e-12)
        rs = [r[i] for i in members if not np.isnan(r[i])]
        if rs:
            assert bkt.resp_snr_mean == pytest.approx(np.mean(rs), abs=1e-12)
        else:
            assert bkt.resp_snr_mean is None
