"""Black-box evasion attack on the glucose predictor.

The attacker controls only the CGM column of a model input window, must keep
injected values inside the physiologically plausible hyperglycemic band for
the scenario ([125, 499] mg/dL fasting, [180, 499] postprandial), and must
mark any step it touches as observed — a replaced sample cannot stay flagged
missing. Under those constraints a deterministic beam search over
(step, value) replacements looks for a transformation sequence that pushes
the prediction over the hyperglycemic threshold. The search ranks candidates
by the hinge loss ``max(0, threshold + 1 - prediction)`` and is strictly
black-box: it sees model outputs only, never parameters or gradients.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import AlreadyTarget, IndexOutOfWindow, InsufficientData, MedRiskError
from .glucose import (
    Context,
    GlucoseTrace,
    GlycemicState,
    classify,
    hyper_threshold,
)
from .predictor import PredictorConfig, TrainedPredictor, build_windows

LOSS_MARGIN = 1.0  # mg/dL past the threshold before the hinge is satisfied

#: Published reference campaign outcomes at clinical data scale, kept only as
#: context for report rendering. Desk-scale synthetic campaigns are not
#: expected to reproduce these numbers.
REFERENCE_CAMPAIGN_RESULTS = {
    "normal_to_hyper_pct": {
        "lowest": {"patient": 2, "fasting": 67.4, "postprandial": 44.2},
        "highest": {"patient": 5, "fasting": 100.0, "postprandial": 97.9},
    },
    "hypo_to_hyper_pct": {
        "lowest": {"patient": 3, "fasting": 72.4, "postprandial": 28.0},
        "highest": {"patient": 5, "fasting": 100.0, "postprandial": 100.0},
    },
    "benign_rmse_mg_dl": {"max": 21.0, "average": 18.3},
}


class TransformKind(enum.Enum):
    REPLACE_CGM = "replace_cgm"
    INCREMENT_CGM = "increment_cgm"


@dataclass(frozen=True)
class Transformation:
    kind: TransformKind
    step: int
    value: float  # replacement value, or delta for increments

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "step": self.step, "value": self.value}


@dataclass(frozen=True)
class AttackScenario:
    context: Context
    value_bounds: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        expected = (hyper_threshold(self.context), 499.0)
        if self.value_bounds is None:
            object.__setattr__(self, "value_bounds", expected)
        elif tuple(self.value_bounds) != expected:
            raise MedRiskError(
                f"scenario bounds for {self.context.value} must be {expected}"
            )

    @property
    def threshold(self) -> float:
        return self.value_bounds[0]


@dataclass(frozen=True)
class AttackBudget:
    max_modified_steps: int = 6
    beam_width: int = 8
    value_grid: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.max_modified_steps < 0:
            raise MedRiskError("max_modified_steps must be >= 0")
        if self.beam_width < 1:
            raise MedRiskError("beam_width must be >= 1")

    def grid_for(self, scenario: AttackScenario) -> tuple[float, ...]:
        """Candidate values, clipped into the scenario bounds and sorted."""
        low, high = scenario.value_bounds
        raw = self.value_grid or (low, (low + high) / 2.0, 300.0, 400.0, 499.0)
        clipped = {min(max(v, low), high) for v in raw}
        return tuple(sorted(clipped))


@dataclass(frozen=True)
class FeatureLayout:
    cgm: int
    missing: int

    @classmethod
    def from_config(cls, cfg: PredictorConfig) -> "FeatureLayout":
        return cls(
            cgm=cfg.features_used.index("cgm"),
            missing=cfg.features_used.index("missing"),
        )


DEFAULT_LAYOUT = FeatureLayout(cgm=0, missing=3)


@dataclass(frozen=True)
class AdversarialResult:
    transforms: tuple[Transformation, ...]
    benign_prediction: float
    attacked_prediction: float
    benign_state: GlycemicState
    attacked_state: GlycemicState
    success: bool
    steps_modified: int

    def to_dict(self) -> dict:
        return {
            "transforms": [t.to_dict() for t in self.transforms],
            "benign_prediction": self.benign_prediction,
            "attacked_prediction": self.attacked_prediction,
            "benign_state": self.benign_state.value,
            "attacked_state": self.attacked_state.value,
            "success": self.success,
            "steps_modified": self.steps_modified,
        }


def apply_transform(
    window: np.ndarray,
    tr: Transformation,
    scenario: AttackScenario,
    layout: FeatureLayout = DEFAULT_LAYOUT,
) -> np.ndarray:
    """Apply one CGM transformation; returns a new window.

    The resulting CGM value is clamped into the scenario bounds and the step
    is marked observed. No other feature is touched.

    Raises:
        IndexOutOfWindow
    """
    if not 0 <= tr.step < window.shape[0]:
        raise IndexOutOfWindow(tr.step, window.shape[0])
    low, high = scenario.value_bounds
    new = window.copy()
    current = new[tr.step, layout.cgm]
    value = tr.value if tr.kind is TransformKind.REPLACE_CGM else current + tr.value
    new[tr.step, layout.cgm] = min(max(value, low), high)
    new[tr.step, layout.missing] = 0.0
    return new


def _predict_many(p, windows: np.ndarray) -> np.ndarray:
    """Model outputs for a stack of windows using whatever surface the
    predictor offers; only outputs are consumed (black-box contract)."""
    batch = getattr(p, "predict_batch", None)
    if callable(batch):
        return np.asarray(batch(windows))
    return np.array([p.predict(w) for w in windows])


def generate_adversarial(
    p,
    window: np.ndarray,
    scenario: AttackScenario,
    budget: AttackBudget,
    layout: FeatureLayout | None = None,
) -> AdversarialResult:
    """Beam-search a transformation sequence forcing a hyperglycemic forecast.

    At each depth every beam candidate is expanded with each (step, grid
    value) replacement on a not-yet-modified step; candidates rank by the
    hinge loss, ties broken by the transform sequence (earlier step, then
    lower value). The search stops at the first depth reaching the target
    state or when the step budget is exhausted, returning the best explored
    candidate either way.

    Raises:
        AlreadyTarget: the unmodified window already predicts hyperglycemic.
    """
    if layout is None:
        layout = (
            FeatureLayout.from_config(p.config)
            if hasattr(p, "config")
            else DEFAULT_LAYOUT
        )
    threshold = scenario.threshold
    benign_pred = float(_predict_many(p, window[None])[0])
    benign_state = classify(benign_pred, scenario.context)
    if benign_state is GlycemicState.HYPERGLYCEMIC:
        raise AlreadyTarget(benign_pred)

    def hinge(pred: float) -> float:
        return max(0.0, threshold + LOSS_MARGIN - pred)

    grid = budget.grid_for(scenario)
    n_steps = window.shape[0]

    # Candidate = (loss, path key, transforms, window, prediction)
    root = (hinge(benign_pred), (), (), window, benign_pred)
    best = root
    beam = [root]

    for _ in range(budget.max_modified_steps):
        expansions = []
        for _, path_key, transforms, wnd, _ in beam:
            used = {t.step for t in transforms}
            for step in range(n_steps):
                if step in used:
                    continue
                for value in grid:
                    tr = Transformation(TransformKind.REPLACE_CGM, step, value)
                    expansions.append(
                        (path_key + ((step, value),), transforms + (tr,),
                         apply_transform(wnd, tr, scenario, layout))
                    )
        if not expansions:
            break
        preds = _predict_many(p, np.stack([e[2] for e in expansions]))
        candidates = [
            (hinge(float(pred)), path_key, transforms, wnd, float(pred))
            for (path_key, transforms, wnd), pred in zip(expansions, preds)
        ]
        candidates.sort(key=lambda c: (c[0], c[1]))
        beam = candidates[: budget.beam_width]
        if beam[0][:2] < best[:2]:
            best = beam[0]
        if classify(beam[0][4], scenario.context) is GlycemicState.HYPERGLYCEMIC:
            best = beam[0]
            break

    _, _, transforms, _, attacked_pred = best
    attacked_state = classify(attacked_pred, scenario.context)
    return AdversarialResult(
        transforms=transforms,
        benign_prediction=benign_pred,
        attacked_prediction=attacked_pred,
        benign_state=benign_state,
        attacked_state=attacked_state,
        success=attacked_state is GlycemicState.HYPERGLYCEMIC,
        steps_modified=len(transforms),
    )


# --- campaigns ----------------------------------------------------------------

@dataclass(frozen=True)
class PatientCampaign:
    patient_id: str
    n_normal: int
    n_hypo: int
    normal_to_hyper: int
    hypo_to_hyper: int
    rmse_benign: float
    rmse_attacked: float

    @property
    def normal_to_hyper_rate(self) -> float:
        return 100.0 * self.normal_to_hyper / self.n_normal if self.n_normal else 0.0

    @property
    def hypo_to_hyper_rate(self) -> float:
        return 100.0 * self.hypo_to_hyper / self.n_hypo if self.n_hypo else 0.0

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "n_normal": self.n_normal,
            "n_hypo": self.n_hypo,
            "normal_to_hyper_rate": self.normal_to_hyper_rate,
            "hypo_to_hyper_rate": self.hypo_to_hyper_rate,
            "rmse_benign": self.rmse_benign,
            "rmse_attacked": self.rmse_attacked,
        }


@dataclass(frozen=True)
class CampaignMetrics:
    scenario: Context
    per_patient: dict[str, PatientCampaign]
    aggregate: PatientCampaign

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "per_patient": {
                pid: pc.to_dict() for pid, pc in sorted(self.per_patient.items())
            },
            "aggregate": self.aggregate.to_dict(),
        }


def eligible_windows(
    p: TrainedPredictor, trace: GlucoseTrace, scenario: AttackScenario
):
    """Windows attackable under the scenario: the horizon step lies in the
    scenario's fasting/postprandial context, its truth was observed, and the
    benign forecast is not already hyperglycemic."""
    ws = build_windows(trace, p.config)
    if not len(ws.y):
        return ws, np.empty(0), []
    in_context = trace.context[ws.target_step] == (
        scenario.context is Context.POSTPRANDIAL
    )
    benign = p.predict_batch(ws.x)
    states = [classify(float(b), scenario.context) for b in benign]
    keep = [
        i
        for i in range(len(ws.y))
        if in_context[i] and states[i] is not GlycemicState.HYPERGLYCEMIC
    ]
    return ws, benign, keep


def attack_campaign(
    p: TrainedPredictor,
    traces: list[GlucoseTrace],
    scenario: AttackScenario,
    budget: AttackBudget | None = None,
    on_result=None,
) -> CampaignMetrics:
    """Attack every eligible window of every trace and aggregate outcomes.

    ``on_result(patient_id, benign_window, result)`` is invoked per attacked
    window when provided, so callers can audit constraints or dump details
    without a second pass. Metrics are sums and counts, so the result does
    not depend on evaluation order.

    Raises:
        InsufficientData: no trace yields a single eligible window.
    """
    budget = budget or AttackBudget()
    layout = FeatureLayout.from_config(p.config)
    per_patient: dict[str, PatientCampaign] = {}
    pooled = {
        "n_normal": 0,
        "n_hypo": 0,
        "normal_to_hyper": 0,
        "hypo_to_hyper": 0,
        "sq_benign": 0.0,
        "sq_attacked": 0.0,
        "n_windows": 0,
    }

    any_windows = False
    for trace in traces:
        ws, benign, keep = eligible_windows(p, trace, scenario)
        counts = {
            "n_normal": 0,
            "n_hypo": 0,
            "normal_to_hyper": 0,
            "hypo_to_hyper": 0,
        }
        sq_benign = 0.0
        sq_attacked = 0.0
        for i in keep:
            any_windows = True
            result = generate_adversarial(p, ws.x[i], scenario, budget, layout)
            if on_result is not None:
                on_result(trace.patient_id, ws.x[i], result)
            truth = ws.y[i]
            sq_benign += (result.benign_prediction - truth) ** 2
            sq_attacked += (result.attacked_prediction - truth) ** 2
            if result.benign_state is GlycemicState.NORMAL:
                counts["n_normal"] += 1
                counts["normal_to_hyper"] += int(result.success)
            else:
                counts["n_hypo"] += 1
                counts["hypo_to_hyper"] += int(result.success)

        n_windows = counts["n_normal"] + counts["n_hypo"]
        per_patient[trace.patient_id] = PatientCampaign(
            patient_id=trace.patient_id,
            n_normal=counts["n_normal"],
            n_hypo=counts["n_hypo"],
            normal_to_hyper=counts["normal_to_hyper"],
            hypo_to_hyper=counts["hypo_to_hyper"],
            rmse_benign=float(np.sqrt(sq_benign / n_windows)) if n_windows else 0.0,
            rmse_attacked=float(np.sqrt(sq_attacked / n_windows)) if n_windows else 0.0,
        )
        for key in ("n_normal", "n_hypo", "normal_to_hyper", "hypo_to_hyper"):
            pooled[key] += counts[key]
        pooled["sq_benign"] += sq_benign
        pooled["sq_attacked"] += sq_attacked
        pooled["n_windows"] += n_windows

    if not any_windows:
        raise InsufficientData("no eligible windows in any trace")

    n_total = pooled["n_windows"]
    aggregate = PatientCampaign(
        patient_id="all",
        n_normal=pooled["n_normal"],
        n_hypo=pooled["n_hypo"],
        normal_to_hyper=pooled["normal_to_hyper"],
        hypo_to_hyper=pooled["hypo_to_hyper"],
        rmse_benign=float(np.sqrt(pooled["sq_benign"] / n_total)) if n_total else 0.0,
        rmse_attacked=float(np.sqrt(pooled["sq_attacked"] / n_total)) if n_total else 0.0,
    )
    return CampaignMetrics(
        scenario=scenario.context, per_patient=per_patient, aggregate=aggregate
    )
