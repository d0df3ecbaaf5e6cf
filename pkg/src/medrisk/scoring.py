"""Numeric severity scoring plus the four baseline techniques.

``score_mlmed`` turns a :class:`~medrisk.risk_vector.RiskVector` into a 0-10
severity value: a CVSS-style fusion of the CIA damage weights, a product of
rank-spaced exploitability weights, and multiplicative modifiers for the three
secondary factors (affected users, detectability, ease of mitigation). Damage
and exploitability drive the core; the secondary factors only modulate it, so
a vector with zero damage always scores 0.0 no matter how exploitable it is.

The modifier magnitudes live in :class:`ScoringWeights` so deployments can
recalibrate them without touching the formula.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .errors import OutOfRange
from .risk_vector import (
    FACTOR_EVALUATION_ORDER,
    ImpactLevel,
    RiskVector,
    _OrderedCode,
)
from .system_model import AdversaryCapability

# CIA impact weights, fused as 1 - prod(1 - w) like the CVSS impact sub-score.
IMPACT_WEIGHTS = {ImpactLevel.NONE: 0.0, ImpactLevel.LOW: 0.22, ImpactLevel.HIGH: 0.56}


@dataclass(frozen=True)
class ScoringWeights:
    """Tunable modifier magnitudes, symmetric around 1.0.

    A vector sitting at the middle of every secondary scale is unaffected by
    the modifiers.
    """

    affected_users: tuple[float, float, float] = (0.85, 1.0, 1.15)
    detectability: tuple[float, float, float] = (0.85, 1.0, 1.15)
    mitigation_entity: tuple[float, float, float, float] = (0.9, 0.97, 1.03, 1.1)
    mitigation_remediation: tuple[float, float, float, float] = (0.9, 0.97, 1.03, 1.1)


DEFAULT_WEIGHTS = ScoringWeights()


@dataclass(frozen=True)
class ScoreBreakdown:
    """A total severity score with every intermediate the formula produced."""

    total: float
    damage_subscore: float
    exploitability_subscore: float
    modifier_affected_users: float
    modifier_detectability: float
    modifier_mitigation: float

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "damage_subscore": self.damage_subscore,
            "exploitability_subscore": self.exploitability_subscore,
            "modifier_affected_users": self.modifier_affected_users,
            "modifier_detectability": self.modifier_detectability,
            "modifier_mitigation": self.modifier_mitigation,
        }


def roundup1(value: float) -> float:
    """Smallest multiple of 0.1 >= value, safe against float representation.

    Mirrors the integer-arithmetic Roundup of CVSS v3.1 so 0.1-boundary inputs
    do not get bumped a whole tenth by binary noise.
    """
    scaled = round(value * 100_000)
    if scaled % 10_000 == 0:
        return scaled / 100_000
    return (scaled // 10_000 + 1) / 10.0


def _rank_weight(member: _OrderedCode) -> float:
    """Equally spaced weights in (0, 1] by ordinal rank within the enum."""
    levels = len(type(member))
    return (member.rank() + 1) / levels


def score_mlmed(v: RiskVector, weights: ScoringWeights = DEFAULT_WEIGHTS) -> ScoreBreakdown:
    """Score a five-factor vector on the 0-10 scale.

    damage = 1 - prod(1 - w_cia); exploitability = prod of rank weights;
    core = sqrt(damage * exploitability) when damage > 0, else 0;
    total = roundup1(10 * clamp01(core * modifiers)).
    """
    d = v.damage
    damage = 1.0 - (
        (1.0 - IMPACT_WEIGHTS[d.confidentiality])
        * (1.0 - IMPACT_WEIGHTS[d.integrity])
        * (1.0 - IMPACT_WEIGHTS[d.availability])
    )

    e = v.exploitability
    exploitability = (
        _rank_weight(e.attack_vector)
        * _rank_weight(e.attack_complexity)
        * _rank_weight(e.privileges_required)
        * _rank_weight(e.user_interaction)
        * _rank_weight(e.scope)
        * _rank_weight(e.exploit_maturity)
    )

    core = math.sqrt(damage * exploitability) if damage > 0 else 0.0

    m_users = weights.affected_users[v.affected_users.tier.rank()]
    m_detect = weights.detectability[v.detectability.value.rank()]
    m_mitigation = (
        weights.mitigation_entity[v.mitigation.responsible_entity.rank()]
        + weights.mitigation_remediation[v.mitigation.remediation_level.rank()]
    ) / 2.0

    raw = core * m_users * m_detect * m_mitigation
    total = roundup1(10.0 * min(1.0, max(0.0, raw)))
    return ScoreBreakdown(
        total=total,
        damage_subscore=damage,
        exploitability_subscore=exploitability,
        modifier_affected_users=m_users,
        modifier_detectability=m_detect,
        modifier_mitigation=m_mitigation,
    )


# --- DREAD -------------------------------------------------------------------

@dataclass(frozen=True)
class DreadRating:
    damage: int
    reproducibility: int
    exploitability: int
    affected_users: int
    discoverability: int

    def __post_init__(self) -> None:
        for name in (
            "damage",
            "reproducibility",
            "exploitability",
            "affected_users",
            "discoverability",
        ):
            value = getattr(self, name)
            if not 0 <= value <= 10:
                raise OutOfRange(name, value, 0, 10)


def score_dread(r: DreadRating) -> float:
    """Arithmetic mean of the five ratings, one decimal, half away from zero."""
    total = (
        r.damage
        + r.reproducibility
        + r.exploitability
        + r.affected_users
        + r.discoverability
    )
    mean = Decimal(total) / Decimal(5)
    return float(mean.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


# --- FMEA --------------------------------------------------------------------

@dataclass(frozen=True)
class FmeaRating:
    """Classical 1-10 scales; detection 10 means hardest to detect."""

    severity: int
    occurrence: int
    detection: int

    def __post_init__(self) -> None:
        for name in ("severity", "occurrence", "detection"):
            value = getattr(self, name)
            if not 1 <= value <= 10:
                raise OutOfRange(name, value, 1, 10)


def score_fmea(r: FmeaRating) -> int:
    """Risk priority number: severity x occurrence x detection."""
    return r.severity * r.occurrence * r.detection


# --- STRIDE ------------------------------------------------------------------

class StrideCategory(enum.Enum):
    SPOOFING = "spoofing"
    TAMPERING = "tampering"
    REPUDIATION = "repudiation"
    INFORMATION_DISCLOSURE = "information_disclosure"
    DENIAL_OF_SERVICE = "denial_of_service"
    ELEVATION_OF_PRIVILEGE = "elevation_of_privilege"


class ThreatContext(enum.Enum):
    DATA_IN_TRANSIT = "data_in_transit"
    DATA_AT_REST = "data_at_rest"
    IDENTITY = "identity"
    AUDIT = "audit"
    PRIVILEGE = "privilege"


def classify_stride(
    capability: AdversaryCapability, context: ThreatContext
) -> StrideCategory:
    """Map an adversary capability in a context onto a STRIDE category.

    Data manipulation collapses into Tampering regardless of how it is
    performed; the context wins for identity/audit/privilege targets.
    """
    if context is ThreatContext.IDENTITY:
        return StrideCategory.SPOOFING
    if context is ThreatContext.AUDIT:
        return StrideCategory.REPUDIATION
    if context is ThreatContext.PRIVILEGE:
        return StrideCategory.ELEVATION_OF_PRIVILEGE
    if capability is AdversaryCapability.DOS:
        return StrideCategory.DENIAL_OF_SERVICE
    if capability is AdversaryCapability.WRITE:
        return StrideCategory.TAMPERING
    return StrideCategory.INFORMATION_DISCLOSURE


# --- framework coverage ------------------------------------------------------

COVERAGE_METHODS = ("DREAD", "STRIDE", "FMEA", "CVSS", "OtherWorks")

# Which of the five factors each established method takes into account.
_COVERAGE_ROWS: dict[str, tuple[bool, bool, bool, bool, bool]] = {
    "DREAD": (True, True, True, True, False),
    "STRIDE": (True, False, False, False, False),
    "FMEA": (True, False, False, True, False),
    "CVSS": (True, True, False, False, False),
    "OtherWorks": (True, True, False, False, False),
}


def framework_coverage_table() -> dict[str, dict[str, bool]]:
    """Factor coverage per method; no established method covers mitigation."""
    return {
        method: dict(zip(FACTOR_EVALUATION_ORDER, _COVERAGE_ROWS[method]))
        for method in COVERAGE_METHODS
    }


def coverage_table_csv() -> str:
    """Coverage matrix as CSV with yes/no cells."""
    lines = ["method," + ",".join(FACTOR_EVALUATION_ORDER)]
    table = framework_coverage_table()
    for method in COVERAGE_METHODS:
        cells = ["yes" if table[method][f] else "no" for f in FACTOR_EVALUATION_ORDER]
        lines.append(method + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def coverage_table_text() -> str:
    """Coverage matrix as an aligned plain-text table."""
    headers = ["method", *FACTOR_EVALUATION_ORDER]
    table = framework_coverage_table()
    rows = [
        [method] + ["yes" if table[method][f] else "no" for f in FACTOR_EVALUATION_ORDER]
        for method in COVERAGE_METHODS
    ]
    widths = [max(len(r[i]) for r in [headers, *rows]) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"
