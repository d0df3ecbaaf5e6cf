"""Five-factor risk assessment values and their canonical vector-string form.

A :class:`RiskVector` bundles the five assessment factors used throughout the
toolkit: damage potential (CIA), exploitability (six sub-factors), affected
users, detectability, and ease of mitigation. Each enumeration is ordered so
that a later member always means *more dangerous*; ``rank()`` exposes that
ordinal and is what the scoring module consumes.

The canonical string form looks like::

    MLMED:1.0/DC:L/DI:H/DA:N/AV:A/AC:L/PR:N/UI:N/S:C/EM:F/AU:I/DT:M/RE:TV/RL:W

The grammar is documented in docs/vector-grammar.md. ``parse_vector`` accepts
the thirteen metric fields in any order (each exactly once, case-sensitive)
after the mandatory ``MLMED:1.0`` prefix; ``serialize_vector`` always emits
the canonical field order above.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import BadPrefix, BadValue, DuplicateKey, MissingKey, UnknownKey

VECTOR_PREFIX = "MLMED:1.0"


class _OrderedCode(enum.Enum):
    """Enum whose member order is the risk order and whose value is its code."""

    def rank(self) -> int:
        """0-based position in the ordering; higher rank = more dangerous."""
        return list(type(self)).index(self)

    @property
    def code(self) -> str:
        return self.value

    @classmethod
    def from_code(cls, code: str):
        for member in cls:
            if member.value == code:
                return member
        raise KeyError(code)


class ImpactLevel(_OrderedCode):
    NONE = "N"
    LOW = "L"
    HIGH = "H"


class AttackVector(_OrderedCode):
    PHYSICAL = "P"
    LOCAL = "L"
    ADJACENT = "A"
    NETWORK = "N"


class AttackComplexity(_OrderedCode):
    HIGH = "H"
    LOW = "L"


class PrivilegesRequired(_OrderedCode):
    HIGH = "H"
    LOW = "L"
    NONE = "N"


class UserInteraction(_OrderedCode):
    REQUIRED = "R"
    NONE = "N"


class Scope(_OrderedCode):
    UNCHANGED = "U"
    CHANGED = "C"


class ExploitMaturity(_OrderedCode):
    UNPROVEN = "U"
    PROOF_OF_CONCEPT = "P"
    FUNCTIONAL = "F"
    HIGH = "H"


class UserTier(_OrderedCode):
    INDIVIDUAL = "I"
    GROUP = "G"
    POPULATION = "P"


class DetectabilityLevel(_OrderedCode):
    # Hard-to-detect exploitation carries the highest risk.
    EASY = "E"
    MODERATE = "M"
    HARD = "D"


class ResponsibleEntity(_OrderedCode):
    SYSTEM_ADMINISTRATOR = "SA"
    TECHNOLOGY_VENDOR = "TV"
    THIRD_PARTY_VENDOR = "3P"
    SECURITY_RESEARCHER = "SR"


class RemediationLevel(_OrderedCode):
    OFFICIAL_FIX = "O"
    TEMPORARY_FIX = "T"
    WORKAROUND = "W"
    UNAVAILABLE = "U"


@dataclass(frozen=True)
class DamagePotential:
    """Impact on the ML engine's data and behaviour, split into CIA."""

    confidentiality: ImpactLevel
    integrity: ImpactLevel
    availability: ImpactLevel


@dataclass(frozen=True)
class Exploitability:
    """How the vulnerability can be exploited, CVSS-style sub-factors."""

    attack_vector: AttackVector
    attack_complexity: AttackComplexity
    privileges_required: PrivilegesRequired
    user_interaction: UserInteraction
    scope: Scope
    exploit_maturity: ExploitMaturity


@dataclass(frozen=True)
class AffectedUsers:
    """Blast radius in users. The optional count is informational only."""

    tier: UserTier
    count_estimate: int | None = None

    def __post_init__(self) -> None:
        if self.count_estimate is not None and self.count_estimate < 1:
            raise ValueError("count_estimate must be >= 1 when present")


@dataclass(frozen=True)
class Detectability:
    value: DetectabilityLevel


@dataclass(frozen=True)
class EaseOfMitigation:
    """Who can remediate and what level of remediation exists."""

    responsible_entity: ResponsibleEntity
    remediation_level: RemediationLevel


@dataclass(frozen=True)
class RiskVector:
    """A complete five-factor assessment. All factors are mandatory."""

    damage: DamagePotential
    exploitability: Exploitability
    affected_users: AffectedUsers
    detectability: Detectability
    mitigation: EaseOfMitigation


FACTOR_EVALUATION_ORDER = (
    "damage_potential",
    "exploitability",
    "affected_users",
    "detectability",
    "ease_of_mitigation",
)

# Canonical field order, with accessors into RiskVector and the enum per key.
_FIELDS: tuple[tuple[str, type[_OrderedCode]], ...] = (
    ("DC", ImpactLevel),
    ("DI", ImpactLevel),
    ("DA", ImpactLevel),
    ("AV", AttackVector),
    ("AC", AttackComplexity),
    ("PR", PrivilegesRequired),
    ("UI", UserInteraction),
    ("S", Scope),
    ("EM", ExploitMaturity),
    ("AU", UserTier),
    ("DT", DetectabilityLevel),
    ("RE", ResponsibleEntity),
    ("RL", RemediationLevel),
)

FIELD_KEYS = tuple(key for key, _ in _FIELDS)


def _field_values(v: RiskVector) -> dict[str, _OrderedCode]:
    return {
        "DC": v.damage.confidentiality,
        "DI": v.damage.integrity,
        "DA": v.damage.availability,
        "AV": v.exploitability.attack_vector,
        "AC": v.exploitability.attack_complexity,
        "PR": v.exploitability.privileges_required,
        "UI": v.exploitability.user_interaction,
        "S": v.exploitability.scope,
        "EM": v.exploitability.exploit_maturity,
        "AU": v.affected_users.tier,
        "DT": v.detectability.value,
        "RE": v.mitigation.responsible_entity,
        "RL": v.mitigation.remediation_level,
    }


def _vector_from_fields(values: dict[str, _OrderedCode]) -> RiskVector:
    return RiskVector(
        damage=DamagePotential(
            confidentiality=values["DC"],
            integrity=values["DI"],
            availability=values["DA"],
        ),
        exploitability=Exploitability(
            attack_vector=values["AV"],
            attack_complexity=values["AC"],
            privileges_required=values["PR"],
            user_interaction=values["UI"],
            scope=values["S"],
            exploit_maturity=values["EM"],
        ),
        affected_users=AffectedUsers(tier=values["AU"]),
        detectability=Detectability(value=values["DT"]),
        mitigation=EaseOfMitigation(
            responsible_entity=values["RE"],
            remediation_level=values["RL"],
        ),
    )


def serialize_vector(v: RiskVector) -> str:
    """Render the canonical vector string, fields always in canonical order.

    The optional affected-users count is informational and is not part of the
    string form.
    """
    values = _field_values(v)
    parts = [VECTOR_PREFIX]
    parts.extend(f"{key}:{values[key].code}" for key, _ in _FIELDS)
    return "/".join(parts)


def parse_vector(s: str) -> RiskVector:
    """Parse a vector string; exact inverse of :func:`serialize_vector`.

    Fields may appear in any order but each exactly once. Parsing is
    case-sensitive and rejects unknown keys, duplicates, missing fields, bad
    values, and any prefix other than ``MLMED:1.0``.

    Raises:
        BadPrefix, UnknownKey, DuplicateKey, BadValue, MissingKey
    """
    segments = s.split("/")
    if segments[0] != VECTOR_PREFIX:
        raise BadPrefix(segments[0])

    enums = dict(_FIELDS)
    seen: dict[str, _OrderedCode] = {}
    for segment in segments[1:]:
        key, sep, code = segment.partition(":")
        if not sep or key not in enums:
            raise UnknownKey(segment if not sep else key)
        if key in seen:
            raise DuplicateKey(key)
        try:
            seen[key] = enums[key].from_code(code)
        except KeyError:
            raise BadValue(key, code) from None

    for key in FIELD_KEYS:
        if key not in seen:
            raise MissingKey(key)
    return _vector_from_fields(seen)


def evaluation_order(v: RiskVector) -> list[str]:
    """Factor names in the order assessments should be walked and reported.

    Damage potential and exploitability come first; affected users,
    detectability, and ease of mitigation follow. The order is fixed and
    independent of the field values.
    """
    return list(FACTOR_EVALUATION_ORDER)


def vector_to_dict(v: RiskVector) -> dict:
    """JSON-friendly representation with snake_case field names."""
    return {
        "damage": {
            "confidentiality": v.damage.confidentiality.code,
            "integrity": v.damage.integrity.code,
            "availability": v.damage.availability.code,
        },
        "exploitability": {
            "attack_vector": v.exploitability.attack_vector.code,
            "attack_complexity": v.exploitability.attack_complexity.code,
            "privileges_required": v.exploitability.privileges_required.code,
            "user_interaction": v.exploitability.user_interaction.code,
            "scope": v.exploitability.scope.code,
            "exploit_maturity": v.exploitability.exploit_maturity.code,
        },
        "affected_users": {
            "tier": v.affected_users.tier.code,
            "count_estimate": v.affected_users.count_estimate,
        },
        "detectability": v.detectability.value.code,
        "mitigation": {
            "responsible_entity": v.mitigation.responsible_entity.code,
            "remediation_level": v.mitigation.remediation_level.code,
        },
    }
