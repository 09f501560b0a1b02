"""Aggregate scoring: per-stratum metric blocks and agreement statistics.

Eight numbers summarize a stratum of episode verdicts: requirement
completion rate (RCR), task success rate (TSR), step hit rate (SHR), action
redundancy rate (ARR), early and delayed termination rates (ETR-E, ETR-D),
dialogue compliance rate (DCR), and information gain rate (IGR). Every
value is a mean over an explicit denominator, and a metric whose eligible
set is empty is reported as absent with a zero count, never as 0.0.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

METRIC_ORDER = ("RCR", "TSR", "SHR", "ARR", "ETR_E", "ETR_D", "DCR", "IGR")


class MetricsError(ValueError):
    """Raised with a machine-readable first token, e.g. EMPTY_STRATUM."""


@dataclass(frozen=True)
class MetricValue:
    value: float | None
    count: int

    @property
    def absent(self) -> bool:
        return self.value is None

    def to_dict(self) -> dict:
        return {"value": self.value, "count": self.count}


def _mean(values: list[float], count_all: int | None = None) -> MetricValue:
    if not values:
        return MetricValue(None, 0)
    return MetricValue(sum(values) / len(values), len(values))


def compute_block(verdicts: list[dict]) -> dict[str, MetricValue]:
    """All eight metrics over one stratum of verdict dicts.

    RCR/TSR/SHR/ETR average over every episode. ARR skips episodes with no
    executed action (logged), DCR skips episodes with no question turns,
    and IGR skips episodes whose instruction had no gap.
    """
    if not verdicts:
        raise MetricsError("EMPTY_STRATUM: no verdicts to aggregate")

    rcr, tsr, shr, early, delayed = [], [], [], [], []
    arr, dcr, igr = [], [], []
    for v in verdicts:
        vec = v["outcome_vector"]
        rcr.append(sum(vec) / len(vec))
        tsr.append(1.0 if min(vec) == 1 else 0.0)
        svec = v["step_vector"]
        shr.append(sum(svec) / len(svec))
        early.append(1.0 if v["termination"] == "Early" else 0.0)
        delayed.append(1.0 if v["termination"] == "Delayed" else 0.0)
        if v["executed_steps"] > 0:
            arr.append(len(v["redundant_steps"]) / v["executed_steps"])
        else:
            logger.info(
                "episode %s/%s executed no actions; excluded from ARR",
                v["task_id"], v["clarity"])
        if v["turn_count"] > 0:
            dcr.append(1.0 - v["violation_count"] / v["turn_count"])
        if v["gain_eligible"]:
            igr.append(v["gain_score"])

    return {
        "RCR": _mean(rcr),
        "TSR": _mean(tsr),
        "SHR": _mean(shr),
        "ARR": _mean(arr),
        "ETR_E": _mean(early),
        "ETR_D": _mean(delayed),
        "DCR": _mean(dcr),
        "IGR": _mean(igr),
    }


STRATIFIERS = ("clarity", "difficulty", "domain")


def build_report(verdicts: list[dict], task_tags: dict[str, dict]) -> dict:
    """Stratified metric report.

    ``task_tags`` maps task_id to {"difficulty": ..., "domain": ...}; the
    clarity stratum comes from the verdict itself. Only non-empty strata
    appear, so EMPTY_STRATUM cannot fire from here.
    """
    def block_dict(vs):
        return {k: mv.to_dict() for k, mv in compute_block(vs).items()}

    def group_by(keyfn):
        groups: dict[str, list[dict]] = {}
        for v in verdicts:
            groups.setdefault(keyfn(v), []).append(v)
        return {k: block_dict(vs) for k, vs in sorted(groups.items())}

    if not verdicts:
        raise MetricsError("EMPTY_STRATUM: no verdicts to report")
    return {
        "episodes": len(verdicts),
        "overall": block_dict(verdicts),
        "by_clarity": group_by(lambda v: v["clarity"]),
        "by_difficulty": group_by(lambda v: task_tags[v["task_id"]]["difficulty"]),
        "by_domain": group_by(lambda v: task_tags[v["task_id"]]["domain"]),
    }


_TEXT_COLUMNS = ("RCR", "TSR", "SHR", "ARR", "ETR_E", "ETR_D", "DCR", "IGR")


def _cell(mv: dict) -> str:
    if mv["value"] is None:
        return "-"
    return f"{mv['value'] * 100:.1f}"


def render_text(report: dict, by: str | None = None) -> str:
    """Fixed-width table, values scaled to percentages with one decimal.

    ``by`` picks one stratifier section; default prints overall plus every
    section.
    """
    sections: list[tuple[str, dict]] = [("Overall", report["overall"])]
    chosen = STRATIFIERS if by is None else (by,)
    for strat in chosen:
        key = f"by_{strat}"
        for name, block in report.get(key, {}).items():
            sections.append((f"{strat.capitalize()}:{name}", block))

    label_w = max(len(s[0]) for s in sections) + 2
    header = "stratum".ljust(label_w) + "  n" + "".join(
        c.replace("_", "-").rjust(8) for c in _TEXT_COLUMNS)
    lines = [header]
    for name, block in sections:
        n = max(mv["count"] for mv in block.values())
        row = name.ljust(label_w) + f"{n:3d}" + "".join(
            _cell(block[c]).rjust(8) for c in _TEXT_COLUMNS)
        lines.append(row)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Agreement statistics


def fleiss_kappa(table) -> float:
    """Chance-corrected agreement for a ratings table.

    Rows are items, columns are categories, each cell counts the raters who
    placed that item in that category; every row must sum to the same rater
    count. Unanimous marginals (all mass in one category) are degenerate:
    perfect observed agreement returns 1.0, anything else is an error.
    """
    M = np.asarray(table, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 2:
        raise MetricsError(f"BAD_TABLE: need items x >=2 categories, got {M.shape}")
    n = M[0].sum()
    if not np.all(M.sum(axis=1) == n):
        raise MetricsError("RAGGED_TABLE: rows rate different rater counts")
    if n < 2:
        raise MetricsError("BAD_TABLE: agreement needs at least two raters")
    p_j = M.sum(axis=0) / M.sum()
    P_i = ((M ** 2).sum(axis=1) - n) / (n * (n - 1))
    P_bar = float(P_i.mean())
    P_e = float((p_j ** 2).sum())
    if P_e == 1.0:
        if P_bar == 1.0:
            return 1.0
        raise MetricsError("DEGENERATE_MARGINALS: chance agreement is already 1")
    return (P_bar - P_e) / (1 - P_e)


def jaccard(a, b) -> float:
    """Overlap of two equal-length binary vectors; empty/empty is 1.0."""
    if len(a) != len(b):
        raise MetricsError(f"ARITY_MISMATCH: {len(a)} vs {len(b)}")
    for v in (*a, *b):
        if v not in (0, 1):
            raise MetricsError(f"BAD_TABLE: vectors must be binary, got {v!r}")
    inter = sum(1 for x, y in zip(a, b) if x and y)
    union = sum(1 for x, y in zip(a, b) if x or y)
    return 1.0 if union == 0 else inter / union


# ---------------------------------------------------------------------------
# Human-agreement reliability pipeline


def _majority(labels: list[int]) -> int:
    return 1 if 2 * sum(labels) >= len(labels) else 0


def _kappa_table(items: list[list[int]]) -> list[list[int]]:
    """Binary rater labels per item -> Fleiss count table."""
    return [[len(row) - sum(row), sum(row)] for row in items]


def reliability_report(fixture: dict) -> dict:
    """Agreement between human raters and the automated verdicts.

    The fixture carries, per evaluated packet, the system's outcome and
    step vectors plus each rater's version of them, and each rater's set of
    gap slots they judged filled. Items pool across packets and positions:
    kappa per vector family and overall, Jaccard of the system vector
    against the majority consensus, and the rate at which the system's
    fill judgments agree with the consensus.
    """
    raters = fixture["raters"]
    if len(raters) < 2:
        raise MetricsError("BAD_TABLE: reliability needs at least two raters")

    families: dict[str, dict[str, list[int]]] = {
        "outcome": {"rows": [], "system": [], "consensus": []},
        "step": {"rows": [], "system": [], "consensus": []},
    }
    fill_total = 0
    fill_agree = 0

    for packet in fixture["packets"]:
        for family in ("outcome", "step"):
            doc = packet[family]
            width = len(doc["system"])
            for rated in doc["raters"]:
                if len(rated) != width:
                    raise MetricsError(
                        f"ARITY_MISMATCH: {packet['packet']} {family}")
            for pos in range(width):
                labels = [rated[pos] for rated in doc["raters"]]
                families[family]["rows"].append(labels)
                families[family]["system"].append(doc["system"][pos])
                families[family]["consensus"].append(_majority(labels))
        fills = packet.get("fills")
        if fills:
            gap = fills["gap"]
            for slot in gap:
                labels = [1 if slot in rated else 0 for rated in fills["raters"]]
                system = 1 if slot in fills["system"] else 0
                fill_total += 1
                if system == _majority(labels):
                    fill_agree += 1

    out: dict = {"kappa": {}, "jaccard": {}, "counts": {}}
    pooled_rows: list[list[int]] = []
    for family, data in families.items():
        pooled_rows.extend(data["rows"])
        out["kappa"][family] = fleiss_kappa(_kappa_table(data["rows"]))
        out["jaccard"][family] = jaccard(data["system"], data["consensus"])
        out["counts"][family] = len(data["rows"])
    out["kappa"]["overall"] = fleiss_kappa(_kappa_table(pooled_rows))
    out["counts"]["overall"] = len(pooled_rows)
    out["fill_agreement"] = (
        None if fill_total == 0 else fill_agree / fill_total)
    out["counts"]["fills"] = fill_total
    return out


def load_reliability_fixture(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
