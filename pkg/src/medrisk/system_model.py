"""Connected medical systems as typed data-flow graphs with vulnerabilities.

A :class:`SystemGraph` holds device nodes, directed data flows (each carrying
a set of named features over a channel), and vulnerability records located at
a node or on a flow. Graphs are immutable values: constructors validate and
return new graphs, so they are safe to share across threads.

Feature paths are the connective tissue for end-to-end analysis: a feature
path for feature *g* ending at node *t* is a simple directed path whose flows
all carry *g*, that cannot be extended further backward without repeating a
node. In acyclic graphs these are exactly the paths from the feature's origin
devices; the backward-maximal rule keeps the definition total when round
trips create cycles.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import (
    DanglingFlowEndpoint,
    DuplicateNodeId,
    DuplicateVulnerabilityId,
    GraphError,
    SelfLoopFlow,
    UnknownLocation,
    UnknownNode,
)
from .risk_vector import RiskVector, parse_vector, serialize_vector


class NodeKind(enum.Enum):
    SENSOR = "sensor"
    ACTUATOR = "actuator"
    MOBILE_APP = "mobile_app"
    GATEWAY = "gateway"
    CLOUD_SERVICE = "cloud_service"
    ML_ENGINE = "ml_engine"
    STORAGE = "storage"


class Deployment(enum.Enum):
    HOME = "home"
    CLINIC = "clinic"
    HOSPITAL = "hospital"


class Channel(enum.Enum):
    BLUETOOTH = "bluetooth"
    INTERNET = "internet"
    INTRANET = "intranet"
    CLOUD_API = "cloud_api"
    PHYSICAL_PORT = "physical_port"
    CELLULAR_NETWORK = "cellular_network"


class AdversaryCapability(enum.Enum):
    READ = "read"
    WRITE = "write"
    DOS = "dos"


class Access(enum.Enum):
    LOCAL = "local"
    REMOTE = "remote"


@dataclass(frozen=True)
class DeviceNode:
    id: str
    kind: NodeKind
    vendor: str = ""
    deployment: Deployment = Deployment.HOME

    def __post_init__(self) -> None:
        if not self.id:
            raise GraphError("node id must be non-empty")


@dataclass(frozen=True)
class DataFlow:
    src: str
    dst: str
    channel: Channel
    features: frozenset[str]

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise SelfLoopFlow(self.src)
        if not self.features:
            raise GraphError(f"flow {self.src}->{self.dst} carries no features")


@dataclass(frozen=True)
class FlowRef:
    """Reference to the flow(s) between two nodes over a channel."""

    src: str
    dst: str
    channel: Channel

    def matches(self, flow: DataFlow) -> bool:
        return (
            flow.src == self.src
            and flow.dst == self.dst
            and flow.channel is self.channel
        )

    def __str__(self) -> str:
        return f"{self.src}->{self.dst}[{self.channel.value}]"


@dataclass(frozen=True)
class VulnerabilityRecord:
    """A weakness at a node or flow granting the adversary capabilities."""

    vid: str
    location: str | FlowRef
    grants: frozenset[AdversaryCapability]
    access: Access
    assessment: RiskVector | None = None

    def __post_init__(self) -> None:
        if not self.grants:
            raise GraphError(f"vulnerability {self.vid!r} grants no capabilities")


@dataclass(frozen=True)
class FeaturePath:
    """A node/flow sequence; flows[i] connects nodes[i] to nodes[i+1]."""

    nodes: tuple[str, ...]
    flows: tuple[DataFlow, ...]

    def contains_location(self, location: str | FlowRef) -> bool:
        if isinstance(location, FlowRef):
            return any(location.matches(f) for f in self.flows)
        return location in self.nodes


@dataclass(frozen=True)
class SystemGraph:
    nodes: tuple[DeviceNode, ...]
    flows: tuple[DataFlow, ...]
    vulns: tuple[VulnerabilityRecord, ...] = ()

    def validate(self) -> "SystemGraph":
        """Check all structural invariants; returns self unchanged.

        The ml_engine-presence rule is deliberately not checked here — it only
        matters for propagation, which enforces it itself.
        """
        ids: set[str] = set()
        for node in self.nodes:
            if node.id in ids:
                raise DuplicateNodeId(node.id)
            ids.add(node.id)
        for flow in self.flows:
            for endpoint in (flow.src, flow.dst):
                if endpoint not in ids:
                    raise DanglingFlowEndpoint(endpoint)
        vids: set[str] = set()
        for vuln in self.vulns:
            if vuln.vid in vids:
                raise DuplicateVulnerabilityId(vuln.vid)
            vids.add(vuln.vid)
            self._check_location(vuln.location)
        return self

    def _check_location(self, location: str | FlowRef) -> None:
        if isinstance(location, FlowRef):
            if not any(location.matches(f) for f in self.flows):
                raise UnknownLocation(str(location))
        elif location not in self.node_ids():
            raise UnknownLocation(str(location))

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}

    def node(self, node_id: str) -> DeviceNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise UnknownNode(node_id)

    def ml_engines(self) -> list[DeviceNode]:
        return [n for n in self.nodes if n.kind is NodeKind.ML_ENGINE]

    def vuln(self, vid: str) -> VulnerabilityRecord:
        for v in self.vulns:
            if v.vid == vid:
                return v
        raise UnknownLocation(vid)


def build_graph(nodes: list[DeviceNode], flows: list[DataFlow]) -> SystemGraph:
    """Assemble and validate a graph from nodes and flows.

    Raises:
        DuplicateNodeId, DanglingFlowEndpoint, SelfLoopFlow
    """
    return SystemGraph(nodes=tuple(nodes), flows=tuple(flows)).validate()


def attach_vulnerability(graph: SystemGraph, v: VulnerabilityRecord) -> SystemGraph:
    """Return a new graph carrying ``v``; nodes and flows are untouched.

    Raises:
        UnknownLocation, DuplicateVulnerabilityId
    """
    if any(existing.vid == v.vid for existing in graph.vulns):
        raise DuplicateVulnerabilityId(v.vid)
    graph._check_location(v.location)
    return replace(graph, vulns=graph.vulns + (v,))


def _maximal_paths(
    flows: tuple[DataFlow, ...], anchor: str, forward: bool
) -> list[FeaturePath]:
    """Simple paths through ``flows`` that cannot be extended past ``anchor``.

    With ``forward=False`` paths end at the anchor and are grown backward;
    with ``forward=True`` they start at the anchor and are grown forward.
    """
    results: list[FeaturePath] = []

    def grow(nodes: list[str], path_flows: list[DataFlow]) -> None:
        tip = nodes[0] if not forward else nodes[-1]
        if forward:
            extensions = [f for f in flows if f.src == tip and f.dst not in nodes]
        else:
            extensions = [f for f in flows if f.dst == tip and f.src not in nodes]
        if not extensions:
            if path_flows:
                results.append(FeaturePath(nodes=tuple(nodes), flows=tuple(path_flows)))
            return
        for f in extensions:
            if forward:
                grow(nodes + [f.dst], path_flows + [f])
            else:
                grow([f.src] + nodes, [f] + path_flows)

    grow([anchor], [])
    results.sort(key=lambda p: (p.nodes, tuple(f.channel.value for f in p.flows)))
    return results


def feature_paths(graph: SystemGraph, feature: str, target: str) -> list[FeaturePath]:
    """All feature paths for ``feature`` terminating at ``target``.

    Paths are simple, every flow on them carries the feature, and they start
    as far upstream as the feature travels. Ordered lexicographically by node
    id sequence (channel codes break ties between parallel flows).

    Raises:
        UnknownNode
    """
    if target not in graph.node_ids():
        raise UnknownNode(target)
    carrying = tuple(f for f in graph.flows if feature in f.features)
    return _maximal_paths(carrying, target, forward=False)


def feature_paths_from(graph: SystemGraph, feature: str, source: str) -> list[FeaturePath]:
    """All feature paths for ``feature`` originating at ``source``.

    Mirror image of :func:`feature_paths`, used to reason about data a node
    emits (e.g. commands an ML engine sends downstream).
    """
    if source not in graph.node_ids():
        raise UnknownNode(source)
    carrying = tuple(f for f in graph.flows if feature in f.features)
    return _maximal_paths(carrying, source, forward=True)


def all_features(graph: SystemGraph) -> set[str]:
    out: set[str] = set()
    for flow in graph.flows:
        out |= flow.features
    return out


# --- JSON serialization ------------------------------------------------------

def graph_to_dict(graph: SystemGraph) -> dict:
    def vuln_dict(v: VulnerabilityRecord) -> dict:
        if isinstance(v.location, FlowRef):
            location = {
                "flow": {
                    "src": v.location.src,
                    "dst": v.location.dst,
                    "channel": v.location.channel.value,
                }
            }
        else:
            location = {"node": v.location}
        return {
            "vid": v.vid,
            "location": location,
            "grants": sorted(c.value for c in v.grants),
            "access": v.access.value,
            "assessment": serialize_vector(v.assessment) if v.assessment else None,
        }

    return {
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "vendor": n.vendor,
                "deployment": n.deployment.value,
            }
            for n in graph.nodes
        ],
        "flows": [
            {
                "src": f.src,
                "dst": f.dst,
                "channel": f.channel.value,
                "features": sorted(f.features),
            }
            for f in graph.flows
        ],
        "vulns": [vuln_dict(v) for v in graph.vulns],
    }


def _enum_value(enum_cls, code: str, field: str):
    try:
        return enum_cls(code)
    except ValueError:
        raise GraphError(f"bad {field} value: {code!r}") from None


def graph_from_dict(data: dict) -> SystemGraph:
    """Build a validated graph from the documented JSON structure."""
    try:
        nodes = [
            DeviceNode(
                id=n["id"],
                kind=_enum_value(NodeKind, n["kind"], "node kind"),
                vendor=n.get("vendor", ""),
                deployment=_enum_value(
                    Deployment, n.get("deployment", "home"), "deployment"
                ),
            )
            for n in data.get("nodes", [])
        ]
        flows = [
            DataFlow(
                src=f["src"],
                dst=f["dst"],
                channel=_enum_value(Channel, f["channel"], "channel"),
                features=frozenset(f["features"]),
            )
            for f in data.get("flows", [])
        ]
    except KeyError as exc:
        raise GraphError(f"missing required field: {exc.args[0]}") from None

    graph = build_graph(nodes, flows)

    for v in data.get("vulns", []):
        try:
            loc = v["location"]
            if "flow" in loc:
                location: str | FlowRef = FlowRef(
                    src=loc["flow"]["src"],
                    dst=loc["flow"]["dst"],
                    channel=_enum_value(Channel, loc["flow"]["channel"], "channel"),
                )
            else:
                location = loc["node"]
            record = VulnerabilityRecord(
                vid=v["vid"],
                location=location,
                grants=frozenset(
                    _enum_value(AdversaryCapability, g, "grant") for g in v["grants"]
                ),
                access=_enum_value(Access, v["access"], "access"),
                assessment=parse_vector(v["assessment"]) if v.get("assessment") else None,
            )
        except KeyError as exc:
            raise GraphError(f"vulnerability missing field: {exc.args[0]}") from None
        graph = attach_vulnerability(graph, record)
    return graph


def load_system(path: str | Path) -> SystemGraph:
    with open(path, encoding="utf-8") as handle:
        return graph_from_dict(json.load(handle))


def save_system(graph: SystemGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(graph_to_dict(graph), handle, indent=2, sort_keys=True)
        handle.write("\n")


def bgms_fixture() -> SystemGraph:
    """The reference blood glucose management system with its two assessed
    vulnerabilities: a Bluetooth read/write weakness on the CGM link and a
    read-only weakness at the insulin pump."""
    fixture = Path(__file__).parent / "fixtures" / "bgms.json"
    return load_system(fixture)
