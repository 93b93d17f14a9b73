"""File formats and bundled data.

CSV formats:

* choice-frequency table: header ``period,<item labels...>``, one row per
  period with the period label first;
* per-period counts: header ``period,count``;
* raw observations: header ``respondent_id,stopping_time,choice``.

JSON documents (orderings, lotteries, estimation/test/survival results)
all carry a ``schema_version`` field.

The package bundles the choice counts of a lottery-choice experiment with
recorded response times, clustered into six stopping-time periods over
five lotteries and a certain outside payment.  The zero-time period's
sample size is not recoverable from the published frequencies (every
zero-time respondent chose the outside payment, so its cells carry no
variance weight either way); the bundled table uses a placeholder of 25.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

import numpy as np

from .core import ChoiceDataset, Menu, OrderingSet, PreferenceOrdering
from .errors import ValidationError
from .lotteries import Lottery

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Choice-frequency tables
# ---------------------------------------------------------------------------

def write_pi_csv(path, pi: ChoiceDataset, menu: Menu) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", *menu.items])
        for t in range(pi.d_t):
            label = pi.period_labels[t] if pi.period_labels else str(t + 1)
            writer.writerow([label, *[repr(float(v)) for v in pi.pi[t]]])


def read_pi_csv(path, outside_label: str | None = None) -> tuple[ChoiceDataset, Menu]:
    """Read a choice-frequency table; the header defines the menu."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "period":
        raise ValidationError(f"{path}: expected a header starting with 'period'")
    labels = tuple(rows[0][1:])
    outside = labels.index(outside_label) if outside_label else None
    if outside_label and outside_label not in labels:
        raise ValidationError(f"{path}: outside label {outside_label!r} not a column")
    menu = Menu(items=labels, outside_index=outside)
    period_labels = tuple(r[0] for r in rows[1:])
    pi = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return ChoiceDataset(pi=pi, period_labels=period_labels), menu


def write_counts_csv(path, counts) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "count"])
        for t, c in enumerate(counts, start=1):
            writer.writerow([t, int(c)])


def read_counts_csv(path) -> tuple[int, ...]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["period", "count"]:
        raise ValidationError(f"{path}: expected header 'period,count'")
    return tuple(int(r[1]) for r in rows[1:])


def read_observations_csv(path):
    from .clustering import RawObservation

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"respondent_id", "stopping_time", "choice"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValidationError(
                f"{path}: expected columns respondent_id,stopping_time,choice"
            )
        return [
            RawObservation(
                respondent_id=row["respondent_id"],
                stopping_time=float(row["stopping_time"]),
                choice=row["choice"],
            )
            for row in reader
        ]


# ---------------------------------------------------------------------------
# Attention rules
# ---------------------------------------------------------------------------

def write_rule_csv(path, rule, menu: Menu) -> None:
    """One row per period; one column per (preference block, set)."""
    headers = []
    for i in range(rule.d_pref):
        for mask in rule.set_index.masks:
            members = "+".join(
                menu.items[b] for b in range(menu.n) if mask >> b & 1
            )
            headers.append(f"pref{i}|{members}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", *headers])
        for t in range(rule.d_t):
            writer.writerow([t + 1, *[repr(float(v)) for v in rule.u[t]]])


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def orderings_to_json(orderings: OrderingSet, menu: Menu) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "items": list(menu.items),
        "orderings": [list(o.labels(menu)) for o in orderings],
    }


def orderings_from_json(doc: dict, menu: Menu) -> OrderingSet:
    return OrderingSet(
        tuple(
            PreferenceOrdering.from_labels(menu, labels)
            for labels in doc["orderings"]
        )
    )


def lotteries_to_json(lotteries) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "lotteries": [
            {"label": l.label, "outcomes": [[x, q] for x, q in l.outcomes]}
            for l in lotteries
        ],
    }


def lotteries_from_json(doc: dict) -> tuple[Lottery, ...]:
    return tuple(
        Lottery(entry["label"], tuple((x, q) for x, q in entry["outcomes"]))
        for entry in doc["lotteries"]
    )


def estimation_to_json(result, menu: Menu, orderings: OrderingSet) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n_sims": result.n_sims,
        "seed": result.seed,
        "best_index": result.best_index,
        "best_distance": result.best_distance,
        "preference_weights": [
            {"ordering": list(orderings[i].labels(menu)), "weight": float(w)}
            for i, w in enumerate(result.best_p.p)
        ],
        "failed_simulations": list(result.failed_indices),
    }


def write_bootstrap_stats_csv(path, result) -> None:
    """Dump the bootstrap statistic distribution, one replication per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication", "statistic"])
        for l, value in enumerate(result.bootstrap_stats, start=1):
            writer.writerow([l, repr(float(value))])


def test_to_json(result) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "p_value": result.p_value,
        "reject": result.reject,
        "alpha": result.alpha,
        "tau_n": result.tau_n,
        "n_boot": result.n_boot,
        "degenerate": result.degenerate,
    }


def survivors_to_json(report, menu: Menu) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "vacuous": report.vacuous,
        "survivors": [list(o.labels(menu)) for o in report.survivors],
        "rejected_prefixes": [
            {
                "prefix": [menu.items[i] for i in rp.prefix],
                "witness": type(rp.witness).__name__,
            }
            for rp in report.rejected
        ],
    }


def dump_json(path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Bundled experiment data
# ---------------------------------------------------------------------------

def _data_text(name: str) -> str:
    return resources.files("timedchoice.data").joinpath(name).read_text()


def load_experiment_dataset() -> tuple[ChoiceDataset, Menu]:
    """The bundled clustered experiment data, frequencies exact from counts."""
    text = _data_text("experiment_choice_counts.csv")
    rows = list(csv.reader(io.StringIO(text)))
    labels = tuple(rows[0][1:])
    menu = Menu(items=labels, outside_index=labels.index("lO"))
    counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    totals = counts.sum(axis=1)
    pi = counts / totals[:, None]
    return (
        ChoiceDataset(
            pi=pi,
            period_counts=tuple(int(t) for t in totals),
            period_labels=tuple(r[0] for r in rows[1:]),
        ),
        menu,
    )


def load_experiment_lotteries() -> tuple[Lottery, ...]:
    doc = json.loads(_data_text("experiment_lotteries.json"))
    return lotteries_from_json(doc)
