"""CVSS v3.1 base score, implemented from the public specification.

Only the base metric group is covered. Metric weights, the scope-changed
impact branch, and the integer-arithmetic Roundup all follow the published
formula, so scores match the official calculator exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidMetric

_METRIC_CODES = {
    "AV": ("N", "A", "L", "P"),
    "AC": ("L", "H"),
    "PR": ("N", "L", "H"),
    "UI": ("N", "R"),
    "S": ("U", "C"),
    "C": ("H", "L", "N"),
    "I": ("H", "L", "N"),
    "A": ("H", "L", "N"),
}

_AV_WEIGHT = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2}
_AC_WEIGHT = {"L": 0.77, "H": 0.44}
_PR_WEIGHT_UNCHANGED = {"N": 0.85, "L": 0.62, "H": 0.27}
_PR_WEIGHT_CHANGED = {"N": 0.85, "L": 0.68, "H": 0.5}
_UI_WEIGHT = {"N": 0.85, "R": 0.62}
_CIA_WEIGHT = {"H": 0.56, "L": 0.22, "N": 0.0}


@dataclass(frozen=True)
class CvssBaseVector:
    """The eight base metrics with their standard single-letter codes."""

    attack_vector: str
    attack_complexity: str
    privileges_required: str
    user_interaction: str
    scope: str
    confidentiality: str
    integrity: str
    availability: str

    def __post_init__(self) -> None:
        for metric, value in zip(_METRIC_CODES, self._codes()):
            if value not in _METRIC_CODES[metric]:
                raise InvalidMetric(metric, value)

    def _codes(self) -> tuple[str, ...]:
        return (
            self.attack_vector,
            self.attack_complexity,
            self.privileges_required,
            self.user_interaction,
            self.scope,
            self.confidentiality,
            self.integrity,
            self.availability,
        )

    @classmethod
    def from_string(cls, vector: str) -> "CvssBaseVector":
        """Parse a ``CVSS:3.1/AV:N/...`` vector string (base metrics only)."""
        parts = vector.split("/")
        if parts[0] not in ("CVSS:3.1", "CVSS:3.0"):
            raise InvalidMetric("prefix", parts[0])
        metrics: dict[str, str] = {}
        for part in parts[1:]:
            key, _, value = part.partition(":")
            if key not in _METRIC_CODES:
                raise InvalidMetric(key, value)
            metrics[key] = value
        missing = [k for k in _METRIC_CODES if k not in metrics]
        if missing:
            raise InvalidMetric(missing[0], "<absent>")
        return cls(
            attack_vector=metrics["AV"],
            attack_complexity=metrics["AC"],
            privileges_required=metrics["PR"],
            user_interaction=metrics["UI"],
            scope=metrics["S"],
            confidentiality=metrics["C"],
            integrity=metrics["I"],
            availability=metrics["A"],
        )

    def to_string(self) -> str:
        codes = self._codes()
        return "CVSS:3.1/" + "/".join(
            f"{k}:{v}" for k, v in zip(_METRIC_CODES, codes)
        )


def cvss_roundup(value: float) -> float:
    """The specification's Roundup: smallest one-decimal value >= input."""
    scaled = round(value * 100_000)
    if scaled % 10_000 == 0:
        return scaled / 100_000
    return (scaled // 10_000 + 1) / 10.0


def score_cvss_base(v: CvssBaseVector) -> float:
    """Base score in [0.0, 10.0] per the v3.1 formula."""
    iss = 1.0 - (
        (1.0 - _CIA_WEIGHT[v.confidentiality])
        * (1.0 - _CIA_WEIGHT[v.integrity])
        * (1.0 - _CIA_WEIGHT[v.availability])
    )
    if v.scope == "U":
        impact = 6.42 * iss
    else:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15

    pr_weight = _PR_WEIGHT_UNCHANGED if v.scope == "U" else _PR_WEIGHT_CHANGED
    exploitability = (
        8.22
        * _AV_WEIGHT[v.attack_vector]
        * _AC_WEIGHT[v.attack_complexity]
        * pr_weight[v.privileges_required]
        * _UI_WEIGHT[v.user_interaction]
    )

    if impact <= 0:
        return 0.0
    if v.scope == "U":
        return cvss_roundup(min(impact + exploitability, 10.0))
    return cvss_roundup(min(1.08 * (impact + exploitability), 10.0))
