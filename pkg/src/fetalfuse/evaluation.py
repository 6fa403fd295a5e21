"""Metrics, paired significance testing and report records."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .types import ValidationError


@dataclass(frozen=True)
class EvalReport:
    per_sample: tuple  # (id, y, yhat, abs_err)
    mae: float
    mae_std: float
    rmse: float
    r2: float
    n: int
    pvalue: float | None = None


def metrics(y, yhat):
    """Returns (mae, mae_std of absolute errors, rmse, r2). The r2 is NaN with
    a warning when the target has zero variance."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.size == 0:
        raise ValidationError(f"length mismatch: {y.shape} vs {yhat.shape}")
    err = np.abs(y - yhat)
    mae = float(err.mean())
    mae_std = float(err.std())  # population std
    rmse = float(np.sqrt(((y - yhat) ** 2).mean()))
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        warnings.warn("target has zero variance; r2 undefined")
        r2 = float("nan")
    else:
        r2 = 1.0 - float(((y - yhat) ** 2).sum()) / ss_tot
    return mae, mae_std, rmse, r2


def make_report(ids, y, yhat, pvalue=None) -> EvalReport:
    mae, mae_std, rmse, r2 = metrics(y, yhat)
    per_sample = tuple(
        (i, float(a), float(b), float(abs(a - b)))
        for i, a, b in zip(ids, y, yhat))
    return EvalReport(per_sample=per_sample, mae=mae, mae_std=mae_std,
                      rmse=rmse, r2=r2, n=len(per_sample), pvalue=pvalue)


def paired_significance(abs_err_a, abs_err_b, n_perm: int = 10_000,
                        seed: int = 0) -> float:
    """Two-sided paired sign-flip permutation test on d = err_a - err_b.

    p = (1 + #{|mean(d_perm)| >= |mean(d)|}) / (n_perm + 1).
    """
    a = np.asarray(abs_err_a, dtype=np.float64)
    b = np.asarray(abs_err_b, dtype=np.float64)
    if a.shape != b.shape or a.size == 0:
        raise ValidationError("paired test needs equal-length error vectors")
    d = a - b
    obs = abs(d.mean())
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(n_perm, len(d)))
    perm_means = np.abs((signs * d).mean(axis=1))
    hits = int((perm_means >= obs - 1e-15).sum())
    return (1 + hits) / (n_perm + 1)


def mae_rmse_correlation(reports) -> float:
    """Pearson correlation between mae and rmse across model runs."""
    reports = list(reports)
    if len(reports) < 3:
        raise ValidationError("need at least 3 reports")
    mae = np.array([r.mae for r in reports])
    rmse = np.array([r.rmse for r in reports])
    if mae.std() == 0 or rmse.std() == 0:
        raise ValidationError("zero variance in mae or rmse column")
    return float(np.corrcoef(mae, rmse)[0, 1])
