"""Report assembly and machine-readable writers for the CLI.

A report is a JSON document with a fixed envelope (tool, version, command,
config echo, payload, timings). Payloads are built only from deterministic
inputs — sets are sorted before they are emitted and anything order-sensitive
is carried in arrays — so two runs with the same flags produce byte-identical
payloads; wall-clock timings live outside the payload for that reason.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from . import __version__
from .errors import MissingAssessment
from .evasion import REFERENCE_CAMPAIGN_RESULTS, CampaignMetrics
from .propagation import SystemRiskEntry
from .risk_vector import (
    FACTOR_EVALUATION_ORDER,
    RiskVector,
    serialize_vector,
    vector_to_dict,
)
from .scoring import ScoreBreakdown, framework_coverage_table, score_mlmed
from .system_model import SystemGraph

TOOL_NAME = "medrisk"


def build_report(command: str, config: dict, payload: dict, timings: dict) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "config": config,
        "payload": payload,
        "timings": timings,
    }


def payload_json(report: dict) -> str:
    """The payload alone, canonically serialized (used for determinism checks)."""
    return json.dumps(report["payload"], sort_keys=True)


def write_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")


# --- assess -------------------------------------------------------------------

def _factor_breakdown(vector: RiskVector, score: ScoreBreakdown) -> list[dict]:
    """Per-factor detail rows, in the fixed evaluation order."""
    fields = vector_to_dict(vector)
    detail = {
        "damage_potential": {
            "fields": fields["damage"],
            "subscore": score.damage_subscore,
        },
        "exploitability": {
            "fields": fields["exploitability"],
            "subscore": score.exploitability_subscore,
        },
        "affected_users": {
            "fields": fields["affected_users"],
            "modifier": score.modifier_affected_users,
        },
        "detectability": {
            "fields": {"value": fields["detectability"]},
            "modifier": score.modifier_detectability,
        },
        "ease_of_mitigation": {
            "fields": fields["mitigation"],
            "modifier": score.modifier_mitigation,
        },
    }
    return [{"factor": name, **detail[name]} for name in FACTOR_EVALUATION_ORDER]


def assess_payload(
    graph: SystemGraph, overrides: dict[str, RiskVector] | None = None
) -> dict:
    """Score every vulnerability in the graph.

    Raises:
        MissingAssessment: a vulnerability has neither a stored assessment
            nor an override.
    """
    overrides = overrides or {}
    entries = []
    for vuln in graph.vulns:
        vector = overrides.get(vuln.vid, vuln.assessment)
        if vector is None:
            raise MissingAssessment(vuln.vid)
        score = score_mlmed(vector)
        entries.append(
            {
                "vid": vuln.vid,
                "location": str(vuln.location),
                "access": vuln.access.value,
                "grants": sorted(c.value for c in vuln.grants),
                "vector": serialize_vector(vector),
                "score": score.to_dict(),
                "factors": _factor_breakdown(vector, score),
            }
        )
    entries.sort(key=lambda e: (-e["score"]["total"], e["vid"]))
    return {"assessments": entries, "factor_order": list(FACTOR_EVALUATION_ORDER)}


def write_assess_csv(payload: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["vid", "location", "total", "vector"])
        for entry in payload["assessments"]:
            writer.writerow(
                [
                    entry["vid"],
                    entry["location"],
                    f"{entry['score']['total']:.1f}",
                    entry["vector"],
                ]
            )


# --- propagate ----------------------------------------------------------------

def propagate_payload(
    entries: list[SystemRiskEntry], reach: str, duration: str, max_chain: int
) -> dict:
    return {
        "profile": {"reach": reach, "duration": duration},
        "max_chain": max_chain,
        "ranking": [
            {"rank": i + 1, **entry.to_dict()} for i, entry in enumerate(entries)
        ],
    }


def write_ranking_csv(entries: list[SystemRiskEntry], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["rank", "total", "attack_class", "at", "via", "reads", "writes", "dos", "vector"]
        )
        for i, entry in enumerate(entries):
            cap = entry.capability
            writer.writerow(
                [
                    i + 1,
                    f"{entry.score.total:.1f}",
                    entry.attack_class.value,
                    cap.at,
                    "+".join(cap.via),
                    " ".join(sorted(cap.can_read_features)),
                    " ".join(sorted(cap.can_write_features)),
                    int(cap.can_dos),
                    serialize_vector(entry.derived_vector),
                ]
            )


# --- attack -------------------------------------------------------------------

def attack_payload(
    campaigns: dict[str, CampaignMetrics],
    model_metrics: dict,
    budget: dict,
    data: dict,
) -> dict:
    return {
        "data": data,
        "model": model_metrics,
        "budget": budget,
        "campaigns": {name: m.to_dict() for name, m in sorted(campaigns.items())},
        "reference_results": REFERENCE_CAMPAIGN_RESULTS,
    }


CAMPAIGN_CSV_COLUMNS = (
    "patient",
    "scenario",
    "rate_normal_to_hyper",
    "rate_hypo_to_hyper",
    "rmse_benign",
    "rmse_attacked",
)


def write_campaign_csv(campaigns: dict[str, CampaignMetrics], path: str | Path) -> None:
    """One row per patient per scenario plus pooled ``all`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CAMPAIGN_CSV_COLUMNS)
        for scenario in sorted(campaigns):
            metrics = campaigns[scenario]
            rows = [metrics.per_patient[pid] for pid in sorted(metrics.per_patient)]
            rows.append(metrics.aggregate)
            for pc in rows:
                writer.writerow(
                    [
                        pc.patient_id,
                        scenario,
                        f"{pc.normal_to_hyper_rate:.2f}",
                        f"{pc.hypo_to_hyper_rate:.2f}",
                        f"{pc.rmse_benign:.3f}",
                        f"{pc.rmse_attacked:.3f}",
                    ]
                )


# --- compare-frameworks ---------------------------------------------------------

def compare_payload() -> dict:
    table = framework_coverage_table()
    return {
        "factor_order": list(FACTOR_EVALUATION_ORDER),
        "methods": [
            {
                "method": method,
                "covers": [table[method][f] for f in FACTOR_EVALUATION_ORDER],
            }
            for method in table
        ],
    }


# --- simulate -------------------------------------------------------------------

def simulate_payload(stats: list[dict], files: list[str]) -> dict:
    return {"traces": stats, "files": files}
