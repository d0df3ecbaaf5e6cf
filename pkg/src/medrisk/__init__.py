"""Risk scoring and adversarial evaluation for ML-enabled connected medical
systems: five-factor severity vectors, baseline techniques, end-to-end risk
propagation over a device graph, and a desk-scale glucose-prediction evasion
testbed."""

__version__ = "0.1.0"

from .errors import MedRiskError
from .risk_vector import RiskVector, evaluation_order, parse_vector, serialize_vector
from .scoring import (
    DreadRating,
    FmeaRating,
    ScoreBreakdown,
    classify_stride,
    framework_coverage_table,
    score_dread,
    score_fmea,
    score_mlmed,
)
from .cvss import CvssBaseVector, score_cvss_base
from .system_model import (
    Channel,
    DataFlow,
    DeviceNode,
    FlowRef,
    NodeKind,
    SystemGraph,
    VulnerabilityRecord,
    attach_vulnerability,
    bgms_fixture,
    build_graph,
    feature_paths,
    load_system,
)
from .propagation import (
    AdversaryProfile,
    Duration,
    Reach,
    derive_system_vector,
    effective_capabilities,
    rank_system_risks,
)
from .glucose import (
    Context,
    GlucoseTrace,
    GlycemicState,
    PatientProfile,
    classify,
    synth_cohort,
    synth_patient,
)
from .predictor import PredictorConfig, TrainedPredictor, evaluate, predict, train
from .evasion import (
    AdversarialResult,
    AttackBudget,
    AttackScenario,
    Transformation,
    apply_transform,
    attack_campaign,
    generate_adversarial,
)

__all__ = [
    "MedRiskError",
    "RiskVector",
    "parse_vector",
    "serialize_vector",
    "evaluation_order",
    "ScoreBreakdown",
    "score_mlmed",
    "DreadRating",
    "score_dread",
    "FmeaRating",
    "score_fmea",
    "classify_stride",
    "framework_coverage_table",
    "CvssBaseVector",
    "score_cvss_base",
    "NodeKind",
    "Channel",
    "DeviceNode",
    "DataFlow",
    "FlowRef",
    "VulnerabilityRecord",
    "SystemGraph",
    "build_graph",
    "attach_vulnerability",
    "feature_paths",
    "load_system",
    "bgms_fixture",
    "AdversaryProfile",
    "Reach",
    "Duration",
    "effective_capabilities",
    "derive_system_vector",
    "rank_system_risks",
    "Context",
    "GlycemicState",
    "GlucoseTrace",
    "PatientProfile",
    "classify",
    "synth_patient",
    "synth_cohort",
    "PredictorConfig",
    "TrainedPredictor",
    "train",
    "predict",
    "evaluate",
    "AttackScenario",
    "AttackBudget",
    "Transformation",
    "AdversarialResult",
    "apply_transform",
    "generate_adversarial",
    "attack_campaign",
]
