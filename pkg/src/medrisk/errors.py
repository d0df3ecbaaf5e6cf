"""Exception hierarchy shared across the toolkit.

Every error raised by the library derives from :class:`MedRiskError`, so CLI
code can catch one type and translate it into an exit code plus a message that
names the offending file/field.
"""


class MedRiskError(Exception):
    """Base class for all toolkit errors."""


# --- system graph construction ---------------------------------------------

class GraphError(MedRiskError):
    """Invalid system graph structure."""


class DuplicateNodeId(GraphError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"duplicate node id: {node_id!r}")


class DanglingFlowEndpoint(GraphError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"flow endpoint references undeclared node: {node_id!r}")


class SelfLoopFlow(GraphError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"flow with identical endpoints: {node_id!r}")


class UnknownLocation(GraphError):
    def __init__(self, location: str):
        self.location = location
        super().__init__(f"vulnerability location not found in graph: {location}")


class DuplicateVulnerabilityId(GraphError):
    def __init__(self, vid: str):
        self.vid = vid
        super().__init__(f"duplicate vulnerability id: {vid!r}")


class UnknownNode(GraphError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"unknown node id: {node_id!r}")


# --- risk vector grammar ----------------------------------------------------

class VectorError(MedRiskError):
    """Invalid risk vector string."""


class BadPrefix(VectorError):
    def __init__(self, prefix: str):
        self.prefix = prefix
        super().__init__(f"bad vector prefix: {prefix!r}")


class UnknownKey(VectorError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown vector key: {key!r}")


class DuplicateKey(VectorError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"duplicate vector key: {key!r}")


class MissingKey(VectorError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing vector key: {key!r}")


class BadValue(VectorError):
    def __init__(self, key: str, value: str):
        self.key = key
        self.value = value
        super().__init__(f"bad value for vector key {key!r}: {value!r}")


# --- scoring ----------------------------------------------------------------

class OutOfRange(MedRiskError):
    def __init__(self, field: str, value: float, low: float, high: float):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value} outside [{low}, {high}]")


class InvalidMetric(MedRiskError):
    def __init__(self, metric: str, value: str):
        self.metric = metric
        self.value = value
        super().__init__(f"invalid CVSS metric {metric}:{value}")


# --- propagation ------------------------------------------------------------

class NoMlEngine(MedRiskError):
    def __init__(self) -> None:
        super().__init__("graph contains no ml_engine node")


class MissingBaseAssessment(MedRiskError):
    def __init__(self, vid: str):
        self.vid = vid
        super().__init__(f"no base risk vector for vulnerability: {vid!r}")


# --- glucose model ----------------------------------------------------------

class InvalidProfile(MedRiskError):
    def __init__(self, reason: str):
        super().__init__(f"invalid patient profile: {reason}")


class InsufficientData(MedRiskError):
    def __init__(self, reason: str):
        super().__init__(f"insufficient data: {reason}")


class ShapeMismatch(MedRiskError):
    def __init__(self, expected: tuple, got: tuple):
        self.expected = expected
        self.got = got
        super().__init__(f"window shape {got} does not match expected {expected}")


class OutOfPhysiologicalRange(MedRiskError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"glucose {value} mg/dL outside physiological range [20, 499]")


# --- evasion ----------------------------------------------------------------

class IndexOutOfWindow(MedRiskError):
    def __init__(self, step: int, window_len: int):
        self.step = step
        super().__init__(f"transform step {step} outside window of {window_len} steps")


class AlreadyTarget(MedRiskError):
    def __init__(self, prediction: float):
        self.prediction = prediction
        super().__init__(
            f"benign prediction {prediction:.1f} mg/dL is already hyperglycemic"
        )


# --- reporting --------------------------------------------------------------

class MissingAssessment(MedRiskError):
    def __init__(self, vid: str):
        self.vid = vid
        super().__init__(f"vulnerability {vid!r} has no risk vector assessment")


class InputFileError(MedRiskError):
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")
