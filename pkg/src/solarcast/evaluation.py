"""Per-horizon RMSE in three unit systems, a clear-sky-index persistence
baseline, and benchmark tables.

Model and baseline forecasts both go through :func:`score_forecasts`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ShapeError
from .features import NormStats, Windows
from .rnn import RnnParams, predict_batch

UNITS = ("norm", "kt", "wm2")
UNIT_LABELS = {"norm": "normalised", "kt": "Kt", "wm2": "W/m2"}


@dataclass
class EvalReport:
    horizons: tuple
    rmse_norm: np.ndarray
    rmse_kt: np.ndarray
    rmse_wm2: np.ndarray
    n_samples: int
    site_id: str = ""
    test_years: tuple = ()
    label: str = "model"

    def rmse(self, unit):
        return getattr(self, f"rmse_{unit}")

    def mean_rmse(self, unit="kt"):
        return float(np.mean(self.rmse(unit)))

    def to_dict(self):
        return {
            "label": self.label, "site_id": self.site_id, "n_samples": self.n_samples,
            "test_years": list(self.test_years), "horizons": list(self.horizons),
            **{f"rmse_{u}": [float(v) for v in self.rmse(u)] for u in UNITS},
            **{f"mean_rmse_{u}": self.mean_rmse(u) for u in UNITS},
        }


def _rmse(residuals):
    return np.sqrt(np.mean(residuals ** 2, axis=0))


def score_forecasts(kt_pred, test: Windows, stats: NormStats, clearsky=None,
                    site_id="", label="model"):
    """Score clear-sky-index forecasts ``[n, H]`` against ``test``.

    Residuals are taken in Kt units. The normalised column divides them by the
    training target spread; the W/m2 column multiplies each by the sample's
    clear-sky GHI for that horizon.
    """
    if len(test) == 0:
        raise ConfigurationError("cannot evaluate on an empty test set")
    kt_pred = np.asarray(kt_pred, dtype=np.float64)
    truth = test.kt_targets
    if kt_pred.shape != truth.shape:
        raise ShapeError(f"forecasts {kt_pred.shape} do not match targets {truth.shape}")
    cs = test.clearsky if clearsky is None else np.asarray(clearsky, dtype=np.float64)
    if cs.shape != truth.shape:
        raise ShapeError(f"clear-sky values {cs.shape} do not match targets {truth.shape}")
    stats = stats.select(test.horizons)
    resid = kt_pred - truth
    return EvalReport(
        horizons=tuple(test.horizons),
        rmse_norm=_rmse(resid / stats.target_std),
        rmse_kt=_rmse(resid),
        rmse_wm2=_rmse(resid * cs),
        n_samples=len(test),
        site_id=site_id,
        label=label,
    )


def model_forecasts(params: RnnParams, test: Windows, stats: NormStats, kt_max=2.0):
    if not test.normalized:
        raise ConfigurationError("model inputs must be normalised windows")
    out = predict_batch(params, test.inputs)
    return np.clip(stats.select(test.horizons).denormalize_targets(out), 0.0, kt_max)


def persistence_forecasts(test: Windows):
    """Current clear-sky index carried forward to every horizon."""
    return np.repeat(test.kt_anchor[:, None], len(test.horizons), axis=1)


def evaluate(params: RnnParams, test: Windows, stats: NormStats, clearsky=None,
             site_id="", test_years=(), kt_max=2.0):
    report = score_forecasts(model_forecasts(params, test, stats, kt_max), test, stats,
                             clearsky, site_id, "model")
    report.test_years = tuple(test_years)
    return report


def persistence_baseline(test: Windows, stats: NormStats, clearsky=None, site_id="",
                         test_years=()):
    report = score_forecasts(persistence_forecasts(test), test, stats, clearsky,
                             site_id, "persistence")
    report.test_years = tuple(test_years)
    return report


# -- tables ----------------------------------------------------------------

def _row_labels(horizons):
    return [f"{h}-hour" for h in horizons] + ["Mean RMSE"]


def _column(report, unit):
    vals = list(report.rmse(unit))
    return vals + [report.mean_rmse(unit)]


def render_tables(reports: Sequence[EvalReport], baselines: Optional[Sequence[EvalReport]] = None,
                  unit="kt"):
    """Render ``(text_table, csv_text)``.

    Rows are the horizons plus a mean row. The text table shows ``unit``;
    the CSV carries every unit, with columns ``<site>_<model|baseline>_<unit>``
    and values written with full precision.
    """
    if not reports:
        raise ConfigurationError("no reports to render")
    if unit not in UNITS:
        raise ConfigurationError(f"unit must be one of {UNITS}")
    baselines = list(baselines) if baselines else []
    if baselines and len(baselines) != len(reports):
        raise ConfigurationError("need exactly one baseline per report")
    horizons = tuple(reports[0].horizons)
    for r in list(reports) + baselines:
        if tuple(r.horizons) != horizons:
            raise ConfigurationError(
                f"mixed horizon sets: {horizons} vs {tuple(r.horizons)}")

    labels = _row_labels(horizons)
    pairs = [(r, baselines[i] if baselines else None) for i, r in enumerate(reports)]

    # CSV mirror
    header = ["horizon"]
    columns = []
    for r, b in pairs:
        site = r.site_id or "site"
        for u in UNITS:
            header.append(f"{site}_model_{u}")
            columns.append(_column(r, u))
            if b is not None:
                header.append(f"{site}_baseline_{u}")
                columns.append(_column(b, u))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, label in enumerate(labels):
        w.writerow([label] + [repr(float(c[i])) for c in columns])
    csv_text = buf.getvalue()

    # text table
    years = ",".join(str(y) for y in reports[0].test_years) or "test"
    head = [f"Year {years}"]
    sub = ["F.H."]
    text_cols = []
    for r, b in pairs:
        head += [r.site_id or "site"] + ([""] if b is not None else [])
        sub += ["RNN"] + (["Persist."] if b is not None else [])
        text_cols.append(_column(r, unit))
        if b is not None:
            text_cols.append(_column(b, unit))
    rows = [head, sub] + [
        [label] + [f"{c[i]:.4f}" for c in text_cols] for i, label in enumerate(labels)]
    widths = [max(len(row[k]) for row in rows) for k in range(len(head))]
    lines = [f"RMSE ({UNIT_LABELS[unit]})"]
    for row in rows:
        lines.append("  ".join(cell.rjust(widths[k]) if k else cell.ljust(widths[k])
                               for k, cell in enumerate(row)))
    return "\n".join(lines) + "\n", csv_text
