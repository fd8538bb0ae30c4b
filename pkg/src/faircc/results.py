"""
CSV and JSON writers for run metrics.

Column sets are fixed by ``schema/results.schema.json``. Floats are
written with ``repr`` so repeated runs give byte-identical files.
"""

import csv
import io
import json
from importlib import resources

import numpy as np


def schema():
    text = resources.files("faircc").joinpath("schema/results.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _columns(kind):
    return tuple(c["name"] for c in schema()["csv"][kind]["columns"])


PER_USER_COLUMNS = _columns("per_user")
SUMMARY_COLUMNS = _columns("summary")


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def per_user_rows(metrics):
    for k, r in enumerate(metrics.rates):
        yield {
            "scheme": metrics.scheme,
            "K": metrics.K,
            "alpha": float(metrics.alpha),
            "V": float(metrics.V),
            "seed": metrics.seed,
            "user": k,
            "avg_rate_files_per_slot": float(r),
            "utility": metrics.utility,
            "avg_S": float(metrics.avg_S),
            "avg_Q_total": float(metrics.avg_Q_total),
            "avg_U": float(metrics.avg_U),
            "B_est": float(metrics.B_est),
        }


def summary_row(metrics):
    return {
        "scheme": metrics.scheme,
        "K": metrics.K,
        "alpha": float(metrics.alpha),
        "V": float(metrics.V),
        "seed": metrics.seed,
        "sum_rate_files_per_slot": metrics.sum_rate,
        "utility": metrics.utility,
        "avg_S": float(metrics.avg_S),
        "avg_Q_total": float(metrics.avg_Q_total),
        "avg_U": float(metrics.avg_U),
        "B_est": float(metrics.B_est),
        "max_rate_gap": metrics.rate_gap,
    }


def to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def per_user_csv(metrics_list):
    return to_csv((r for m in metrics_list for r in per_user_rows(m)), PER_USER_COLUMNS)


def summary_csv(metrics_list):
    return to_csv((summary_row(m) for m in metrics_list), SUMMARY_COLUMNS)


def trajectories_json(metrics_list, sample_every):
    docs = []
    for m in metrics_list:
        series = {k: np.asarray(v).tolist() for k, v in m.trajectories.items()}
        docs.append({"scheme": m.scheme, "K": m.K, "seed": m.seed, "sample_every": sample_every, "series": series})
    return json.dumps(docs, indent=1)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
