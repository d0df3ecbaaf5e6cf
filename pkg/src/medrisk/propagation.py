"""End-to-end risk derivation from component vulnerabilities.

Enumerates small chains of exploitable vulnerabilities, works out what each
chain lets the adversary do to an ML engine's data (read, write, deny), and
composes the per-component assessments into one system-level risk vector:

* damage is upgraded to High on the CIA axis the capability actually touches;
* exploitability composes AND-wise (the chain needs every exploit, so each
  sub-factor takes its least dangerous value), except that attack complexity
  improves one step when the adversary can both observe and inject data,
  since observability makes crafting valid injections easier;
* affected users, detectability, and mitigation take their max-risk values.

Ranking the scored entries reproduces the in-silo vs in-context inversion: a
low-severity read-only component weakness can lift a chain above any of its
parts.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

from .errors import MissingBaseAssessment, NoMlEngine
from .risk_vector import (
    AffectedUsers,
    AttackComplexity,
    DamagePotential,
    Detectability,
    EaseOfMitigation,
    Exploitability,
    ImpactLevel,
    RiskVector,
    serialize_vector,
    vector_to_dict,
)
from .scoring import DEFAULT_WEIGHTS, ScoreBreakdown, ScoringWeights, score_mlmed
from .system_model import (
    Access,
    AdversaryCapability,
    SystemGraph,
    VulnerabilityRecord,
    all_features,
    feature_paths,
    feature_paths_from,
)


class Reach(enum.Enum):
    LOCAL_ONLY = "local"
    REMOTE_ONLY = "remote"
    ANY = "any"


class Duration(enum.Enum):
    BRIEF = "brief"
    SUSTAINED = "sustained"


@dataclass(frozen=True)
class AdversaryProfile:
    reach: Reach = Reach.ANY
    duration: Duration = Duration.SUSTAINED


@dataclass(frozen=True)
class EffectiveCapability:
    """What a set of exploited vulnerabilities grants against one ML engine."""

    at: str
    can_read_features: frozenset[str]
    can_write_features: frozenset[str]
    can_dos: bool
    via: tuple[str, ...]

    def is_empty(self) -> bool:
        return not (self.can_read_features or self.can_write_features or self.can_dos)


class AttackClass(enum.Enum):
    INFERENCE_TIME_INTEGRITY = "inference_time_integrity"
    TRAINING_TIME_POISONING = "training_time_poisoning"
    SHADOW_MODEL_CONFIDENTIALITY = "shadow_model_confidentiality"
    AVAILABILITY_LOSS = "availability_loss"


@dataclass(frozen=True)
class SystemRiskEntry:
    capability: EffectiveCapability
    derived_vector: RiskVector
    score: ScoreBreakdown
    attack_class: AttackClass

    def to_dict(self) -> dict:
        return {
            "at": self.capability.at,
            "via": list(self.capability.via),
            "can_read_features": sorted(self.capability.can_read_features),
            "can_write_features": sorted(self.capability.can_write_features),
            "can_dos": self.capability.can_dos,
            "attack_class": self.attack_class.value,
            "vector": serialize_vector(self.derived_vector),
            "vector_fields": vector_to_dict(self.derived_vector),
            "score": self.score.to_dict(),
        }


def _matches_reach(vuln: VulnerabilityRecord, reach: Reach) -> bool:
    if reach is Reach.ANY:
        return True
    if reach is Reach.LOCAL_ONLY:
        return vuln.access is Access.LOCAL
    return vuln.access is Access.REMOTE


def _location_feature_sets(
    graph: SystemGraph, engine: str
) -> tuple[dict[str, set[str]], dict[str, set[str]]]:
    """Features each vulnerability location can touch, per direction.

    Returns (inbound, outbound): vid -> features whose paths into / out of
    ``engine`` pass through the vulnerability's location.
    """
    inbound: dict[str, set[str]] = {v.vid: set() for v in graph.vulns}
    outbound: dict[str, set[str]] = {v.vid: set() for v in graph.vulns}
    for feature in sorted(all_features(graph)):
        in_paths = feature_paths(graph, feature, engine)
        out_paths = feature_paths_from(graph, feature, engine)
        for vuln in graph.vulns:
            if any(p.contains_location(vuln.location) for p in in_paths):
                inbound[vuln.vid].add(feature)
            if any(p.contains_location(vuln.location) for p in out_paths):
                outbound[vuln.vid].add(feature)
    return inbound, outbound


def effective_capabilities(
    graph: SystemGraph,
    profile: AdversaryProfile,
    max_chain: int = 2,
) -> list[EffectiveCapability]:
    """Capabilities from every chain of <= ``max_chain`` exploitable vulns.

    A vulnerability contributes reads for features flowing through its
    location in either direction (inputs observed en route, outputs observed
    downstream), writes only for features flowing *into* the engine, and a
    denial-of-service if it sits on any feature path touching the engine.
    Feature-set-equal capabilities are deduplicated keeping the shortest
    chain; output is ordered by chain ids.

    Raises:
        NoMlEngine
    """
    engines = graph.ml_engines()
    if not engines:
        raise NoMlEngine()

    exploitable = sorted(
        (v for v in graph.vulns if _matches_reach(v, profile.reach)),
        key=lambda v: v.vid,
    )

    capabilities: dict[tuple, EffectiveCapability] = {}
    per_engine = {e.id: _location_feature_sets(graph, e.id) for e in engines}

    for size in range(1, max_chain + 1):
        for subset in itertools.combinations(exploitable, size):
            for engine in engines:
                inbound, outbound = per_engine[engine.id]
                reads: set[str] = set()
                writes: set[str] = set()
                dos = False
                for vuln in subset:
                    touched = inbound[vuln.vid] | outbound[vuln.vid]
                    if AdversaryCapability.READ in vuln.grants:
                        reads |= touched
                    if AdversaryCapability.WRITE in vuln.grants:
                        writes |= inbound[vuln.vid]
                    if AdversaryCapability.DOS in vuln.grants and touched:
                        dos = True
                cap = EffectiveCapability(
                    at=engine.id,
                    can_read_features=frozenset(reads),
                    can_write_features=frozenset(writes),
                    can_dos=dos,
                    via=tuple(v.vid for v in subset),
                )
                if cap.is_empty():
                    continue
                key = (cap.at, cap.can_read_features, cap.can_write_features, cap.can_dos)
                if key not in capabilities:
                    capabilities[key] = cap

    return sorted(capabilities.values(), key=lambda c: (c.via, c.at))


def _max_rank(members):
    return max(members, key=lambda m: m.rank())


def _min_rank(members):
    return min(members, key=lambda m: m.rank())


def derive_system_vector(
    cap: EffectiveCapability,
    base: dict[str, RiskVector],
    duration: Duration = Duration.SUSTAINED,
) -> RiskVector:
    """Compose the chain's component assessments into a system-level vector.

    Raises:
        MissingBaseAssessment: a chain member has no base vector.
    """
    components = []
    for vid in cap.via:
        if vid not in base or base[vid] is None:
            raise MissingBaseAssessment(vid)
        components.append(base[vid])

    sustained_read = bool(cap.can_read_features) and duration is Duration.SUSTAINED
    damage = DamagePotential(
        confidentiality=(
            ImpactLevel.HIGH
            if sustained_read
            else _max_rank([c.damage.confidentiality for c in components])
        ),
        integrity=(
            ImpactLevel.HIGH
            if cap.can_write_features
            else _max_rank([c.damage.integrity for c in components])
        ),
        availability=(
            ImpactLevel.HIGH
            if cap.can_dos
            else _max_rank([c.damage.availability for c in components])
        ),
    )

    ac = _min_rank([c.exploitability.attack_complexity for c in components])
    if cap.can_read_features and cap.can_write_features:
        # Observability aids crafting: one step toward Low.
        members = list(AttackComplexity)
        ac = members[min(ac.rank() + 1, len(members) - 1)]

    exploitability = Exploitability(
        attack_vector=_min_rank([c.exploitability.attack_vector for c in components]),
        attack_complexity=ac,
        privileges_required=_min_rank(
            [c.exploitability.privileges_required for c in components]
        ),
        user_interaction=_min_rank(
            [c.exploitability.user_interaction for c in components]
        ),
        scope=_min_rank([c.exploitability.scope for c in components]),
        exploit_maturity=_min_rank(
            [c.exploitability.exploit_maturity for c in components]
        ),
    )

    return RiskVector(
        damage=damage,
        exploitability=exploitability,
        affected_users=AffectedUsers(
            tier=_max_rank([c.affected_users.tier for c in components])
        ),
        detectability=Detectability(
            value=_max_rank([c.detectability.value for c in components])
        ),
        mitigation=EaseOfMitigation(
            responsible_entity=_max_rank(
                [c.mitigation.responsible_entity for c in components]
            ),
            remediation_level=_max_rank(
                [c.mitigation.remediation_level for c in components]
            ),
        ),
    )


def _classify(cap: EffectiveCapability, duration: Duration) -> AttackClass:
    # Precedence when several apply: write > dos > read.
    if cap.can_write_features:
        if duration is Duration.SUSTAINED:
            return AttackClass.TRAINING_TIME_POISONING
        return AttackClass.INFERENCE_TIME_INTEGRITY
    if cap.can_dos:
        return AttackClass.AVAILABILITY_LOSS
    return AttackClass.SHADOW_MODEL_CONFIDENTIALITY


def rank_system_risks(
    graph: SystemGraph,
    profile: AdversaryProfile,
    max_chain: int = 2,
    weights: ScoringWeights = DEFAULT_WEIGHTS,
) -> list[SystemRiskEntry]:
    """Score every effective capability and rank descending by severity.

    Ties break toward shorter chains, then lexicographic chain ids, so equal
    inputs always serialize identically.
    """
    base = {v.vid: v.assessment for v in graph.vulns if v.assessment is not None}
    entries = []
    for cap in effective_capabilities(graph, profile, max_chain=max_chain):
        vector = derive_system_vector(cap, base, duration=profile.duration)
        entries.append(
            SystemRiskEntry(
                capability=cap,
                derived_vector=vector,
                score=score_mlmed(vector, weights),
                attack_class=_classify(cap, profile.duration),
            )
        )
    entries.sort(
        key=lambda e: (-e.score.total, len(e.capability.via), e.capability.via)
    )
    return entries
