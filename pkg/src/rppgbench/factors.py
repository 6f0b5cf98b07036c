"""OLS regression of SNR on demographic and behavioural factors, and bucket summaries."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from ._special import f_sf, student_t_ppf, student_t_sf, student_t_two_sided
from .errors import InvariantViolation, SingularDesign, TooFewObservations, UnknownColumn

__all__ = [
    "DesignMatrix", "Coefficient", "RegressionReport", "Bucket", "BucketReport",
    "build_design", "fit_ols", "student_t_sf", "bucket_analysis",
]

COND_LIMIT = 1e12
EXACT_FIT_ULPS = 64
SKIN_LEVELS = (2, 3, 4, 5, 6)
BOOL_FACTORS = ("gender_male", "camera_stationary")
BUCKET_HEADER = ["bin", "pulse_snr_mean", "pulse_snr_sd", "resp_snr_mean", "resp_snr_sd", "n"]


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Regressor matrix with named columns; column 0 is the intercept."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        X = np.array(self.values, dtype=np.float64)
        names = tuple(self.names)
        if X.ndim != 2 or X.shape[1] != len(names):
            raise InvariantViolation("design_shape", f"{X.shape} does not match {len(names)} column names")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InvariantViolation("unique_column_names", ", ".join(dupes))
        if not np.isfinite(X).all():
            raise InvariantViolation("design_finite", "design matrix contains NaN or inf")
        n, p = X.shape
        if n <= p:
            raise TooFewObservations(f"{n} observations for {p} columns; need n > p")
        if names[0] != "intercept" or not (X[:, 0] == 1.0).all():
            raise InvariantViolation("intercept_first", "column 0 must be an all-ones 'intercept'")
        for j in range(1, p):
            if (X[:, j] == X[0, j]).all():
                raise SingularDesign([names[j], "intercept"], f"column {names[j]!r} is constant (collinear with intercept)")
        X.flags.writeable = False
        object.__setattr__(self, "values", X)
        object.__setattr__(self, "names", names)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class Coefficient:
    name: str
    coef: float
    std_err: float
    t: float
    p_value: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class RegressionReport:
    coefficients: list
    r_squared: float
    adj_r_squared: float
    f_statistic: float
    prob_f: float
    n_obs: int
    df_resid: int
    df_model: int
    aic: float
    bic: float
    log_likelihood: float
    rss: float
    dep_variable: str = "y"

    def __getitem__(self, name) -> Coefficient:
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self):
        return [c.name for c in self.coefficients]

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        d = asdict(self)
        d["coefficients"] = [{k: clean(v) for k, v in c.items()} for c in d["coefficients"]]
        return {k: (clean(v) if k != "coefficients" else v) for k, v in d.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        """Fixed-width table in the familiar OLS summary layout."""

        def num(v, fmt):
            return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else format(v, fmt)

        rule = "=" * 78
        left = [
            ("Dep. Variable:", self.dep_variable),
            ("Model:", "OLS"),
            ("Method:", "Least Squares"),
            ("No. Observations:", str(self.n_obs)),
            ("Df Residuals:", str(self.df_resid)),
            ("Df Model:", str(self.df_model)),
        ]
        right = [
            ("R-squared:", num(self.r_squared, ".3f")),
            ("Adj. R-squared:", num(self.adj_r_squared, ".3f")),
            ("F-statistic:", num(self.f_statistic, ".4g")),
            ("Prob (F-statistic):", num(self.prob_f, ".3g")),
            ("AIC:", num(self.aic, ".4g")),
            ("BIC:", num(self.bic, ".4g")),
        ]
        lines = [rule]
        for (lk, lv), (rk, rv) in zip(left, right):
            lines.append(f"{lk:<20}{lv:>18}   {rk:<20}{rv:>16}")
        lines.append(rule)
        width = max(12, max(len(c.name) for c in self.coefficients) + 2)
        head = ["coef", "std err", "t", "P>|t|", "[0.025", "0.975]"]
        lines.append(" " * width + "".join(f"{h:>11}" for h in head))
        lines.append("-" * (width + 66))
        for c in self.coefficients:
            vals = [
                num(c.coef, ".4f"), num(c.std_err, ".3f"), num(c.t, ".3f"),
                num(c.p_value, ".3f"), num(c.ci_lo, ".3f"), num(c.ci_hi, ".3f"),
            ]
            lines.append(f"{c.name:<{width}}" + "".join(f"{v:>11}" for v in vals))
        lines.append(rule)
        return "\n".join(lines) + "\n"


def _collinear_columns(X: np.ndarray, names: Sequence[str]) -> Optional[list]:
    """Names of the columns involved in a (near) linear dependency, or None."""
    n, p = X.shape
    for i in range(p):
        for j in range(i + 1, p):
            if np.array_equal(X[:, i], X[:, j]):
                return [names[i], names[j]]
    norms = np.linalg.norm(X, axis=0)
    Xs = X / norms
    _, s, vt = np.linalg.svd(Xs, full_matrices=False)
    cond_xtx = (s[0] / s[-1]) ** 2 if s[-1] > 0 else math.inf
    if cond_xtx <= COND_LIMIT:
        return None
    v = np.abs(vt[-1])
    return [names[k] for k in np.flatnonzero(v >= 0.1 * v.max())]


def fit_ols(X: DesignMatrix, y, dep_variable: str = "y") -> RegressionReport:
    A = X.values
    names = X.names
    y = np.asarray(y, dtype=np.float64)
    n, p = A.shape
    if y.shape != (n,):
        raise InvariantViolation("target_length", f"y has shape {y.shape}, expected ({n},)")
    if not np.isfinite(y).all():
        raise InvariantViolation("target_finite", "y contains NaN or inf")
    bad = _collinear_columns(A, names)
    if bad is not None:
        raise SingularDesign(bad)

    Q, R = np.linalg.qr(A)
    beta = solve_triangular(R, Q.T @ y)
    resid = y - A @ beta
    # residuals at the rounding floor of y mean an exact fit
    if np.max(np.abs(resid)) <= EXACT_FIT_ULPS * np.finfo(float).eps * np.max(np.abs(y)):
        resid = np.zeros_like(resid)
    rss = float(resid @ resid)
    centered = y - y.mean()
    tss = float(centered @ centered)
    df_resid = n - p
    df_model = p - 1
    s2 = rss / df_resid
    R_inv = solve_triangular(R, np.eye(p))
    cov_unscaled = R_inv @ R_inv.T
    se = np.sqrt(s2 * np.diag(cov_unscaled))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    t = np.where((se == 0) & (beta == 0), 0.0, t)
    q = student_t_ppf(0.975, df_resid)
    coefs = [
        Coefficient(
            name=names[j],
            coef=float(beta[j]),
            std_err=float(se[j]),
            t=float(t[j]),
            p_value=student_t_two_sided(float(t[j]), df_resid),
            ci_lo=float(beta[j] - q * se[j]),
            ci_hi=float(beta[j] + q * se[j]),
        )
        for j in range(p)
    ]

    # explained sum of squares from centred fitted values avoids 1 - RSS/TSS cancellation
    explained = A @ beta - y.mean()
    ess = float(explained @ explained)
    if tss > 0 and df_model > 0:
        r2 = min(max(ess / tss, 0.0), 1.0) if rss > 0 else 1.0
    else:
        r2 = 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / df_resid
    if df_model > 0:
        f_stat = (ess / df_model) / (rss / df_resid) if rss > 0 else math.inf
        prob_f = f_sf(f_stat, df_model, df_resid)
    else:
        f_stat, prob_f = math.nan, math.nan
    if rss > 0:
        llf = -0.5 * n * (math.log(2.0 * math.pi) + math.log(rss / n) + 1.0)
    else:
        llf = math.inf
    return RegressionReport(
        coefficients=coefs,
        r_squared=r2,
        adj_r_squared=adj,
        f_statistic=f_stat,
        prob_f=prob_f,
        n_obs=n,
        df_resid=df_resid,
        df_model=df_model,
        aic=2.0 * p - 2.0 * llf,
        bic=p * math.log(n) - 2.0 * llf,
        log_likelihood=llf,
        rss=rss,
        dep_variable=dep_variable,
    )


def _as_float(v, column: str) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("true", "false"):
            return 1.0 if s == "true" else 0.0
        if s == "":
            raise InvariantViolation("factor_present", f"empty value in column {column!r}")
    return float(v)


def build_design(rows: Sequence[Mapping], factors: Sequence[str]) -> DesignMatrix:
    """Intercept plus the requested factors, dummy-encoding ``skin_type``.

    ``skin_type`` expands into ``skin_type_2`` .. ``skin_type_6`` (base case
    type 1) for the levels that occur. Boolean columns become 0/1.
    """
    if not rows:
        raise TooFewObservations("no observations")
    seen = set()
    for factor in factors:
        if factor in seen:
            raise SingularDesign([factor, factor], f"factor {factor!r} requested twice")
        seen.add(factor)
    columns, names = [np.ones(len(rows))], ["intercept"]
    for factor in factors:
        if factor == "skin_type" and "skin_type" in rows[0]:
            levels = np.array([int(_as_float(r["skin_type"], "skin_type")) for r in rows])
            for lv in SKIN_LEVELS:
                if (levels == lv).any():
                    columns.append((levels == lv).astype(np.float64))
                    names.append(f"skin_type_{lv}")
            continue
        if factor not in rows[0]:
            raise UnknownColumn(f"unknown factor column {factor!r}")
        columns.append(np.array([_as_float(r[factor], factor) for r in rows]))
        names.append(factor)
    return DesignMatrix(np.column_stack(columns), tuple(names))


@dataclass(frozen=True)
class Bucket:
    label: str
    lo: float
    hi: float
    n: int
    pulse_snr_mean: Optional[float] = None
    pulse_snr_sd: Optional[float] = None
    resp_snr_mean: Optional[float] = None
    resp_snr_sd: Optional[float] = None


@dataclass(frozen=True)
class BucketReport:
    buckets: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BUCKET_HEADER)
        for b in self.buckets:
            vals = [b.pulse_snr_mean, b.pulse_snr_sd, b.resp_snr_mean, b.resp_snr_sd]
            w.writerow([b.label] + ["" if v is None else repr(float(v)) for v in vals] + [b.n])
        return buf.getvalue()


def _fmt_edge(v: float) -> str:
    return f"{v:g}"


def _mean_sd(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def bucket_analysis(observations: Iterable, edges: Sequence[float]) -> BucketReport:
    """Group ``(factor_value, metrics)`` pairs into ``[e_i, e_i+1)`` bins.

    The last bin is closed on the right. ``metrics`` needs ``pulse_snr`` and
    ``resp_snr`` attributes (either may be None). SDs are population SDs.
    """
    edges = [float(e) for e in edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise InvariantViolation("edges_increasing", f"edges must be strictly increasing, got {edges}")
    obs = list(observations)
    bins = [[] for _ in range(len(edges) - 1)]
    for value, m in obs:
        value = float(value)
        if not edges[0] <= value <= edges[-1]:
            raise InvariantViolation("observation_in_bins", f"value {value} outside [{edges[0]}, {edges[-1]}]")
        k = int(np.searchsorted(edges, value, side="right")) - 1
        bins[min(k, len(bins) - 1)].append(m)
    buckets = []
    for k, members in enumerate(bins):
        lo, hi = edges[k], edges[k + 1]
        closer = "]" if k == len(bins) - 1 else ")"
        label = f"[{_fmt_edge(lo)}, {_fmt_edge(hi)}{closer}"
        pm, ps = _mean_sd([m.pulse_snr for m in members])
        rm, rs = _mean_sd([m.resp_snr for m in members])
        buckets.append(Bucket(label, lo, hi, len(members), pm, ps, rm, rs))
    return BucketReport(buckets)
