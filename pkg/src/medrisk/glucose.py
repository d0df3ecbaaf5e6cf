"""Synthetic patient glucose traces and glycemic-state classification.

Traces live on a fixed 5-minute grid. The generator is deterministic in its
seed and builds each day from four ingredients:

* a circadian baseline ``base + amp * sin(2*pi*(minute - phase)/1440)``;
* meal responses: each meal contributes ``carbs * carb_sens * k((t-t_m)/tau)``
  with the unit-peak kernel ``k(u) = u * exp(1 - u)``, a first-order
  absorption rise that decays back to baseline;
* bolus responses: the same kernel, delayed by the insulin action lag and
  scaled by ``-dose * insulin_sens``; doses are carb-counted with a random
  factor so occasional overdoses produce genuine hypoglycemic dips;
* Gaussian sensor noise plus randomly placed missing stretches.

CGM values are clamped to the reportable range [20, 499] mg/dL and are NaN
exactly where the missing flag is set.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InsufficientData, InvalidProfile, OutOfPhysiologicalRange

STEP_MINUTES = 5
STEPS_PER_DAY = 288
CGM_MIN = 20.0
CGM_MAX = 499.0
POSTPRANDIAL_STEPS = 24  # 120 minutes

HYPO_THRESHOLD = 80.0
HYPER_FASTING_THRESHOLD = 125.0
HYPER_POSTPRANDIAL_THRESHOLD = 180.0


class Context(enum.Enum):
    FASTING = "fasting"
    POSTPRANDIAL = "postprandial"


class GlycemicState(enum.Enum):
    HYPOGLYCEMIC = "hypoglycemic"
    NORMAL = "normal"
    HYPERGLYCEMIC = "hyperglycemic"


def classify(glucose: float, context: Context) -> GlycemicState:
    """Glycemic state of a glucose value under a fasting/postprandial context.

    Raises:
        OutOfPhysiologicalRange: value outside [20, 499] mg/dL.
    """
    if not CGM_MIN <= glucose <= CGM_MAX:
        raise OutOfPhysiologicalRange(glucose)
    if glucose < HYPO_THRESHOLD:
        return GlycemicState.HYPOGLYCEMIC
    threshold = (
        HYPER_FASTING_THRESHOLD
        if context is Context.FASTING
        else HYPER_POSTPRANDIAL_THRESHOLD
    )
    if glucose > threshold:
        return GlycemicState.HYPERGLYCEMIC
    return GlycemicState.NORMAL


def hyper_threshold(context: Context) -> float:
    return (
        HYPER_FASTING_THRESHOLD
        if context is Context.FASTING
        else HYPER_POSTPRANDIAL_THRESHOLD
    )


def postprandial_mask(meal_flag: np.ndarray) -> np.ndarray:
    """True for the 24 steps following any meal step (the meal step itself
    counts as fasting)."""
    mask = np.zeros(len(meal_flag), dtype=bool)
    for step in np.flatnonzero(meal_flag):
        mask[step + 1 : step + 1 + POSTPRANDIAL_STEPS] = True
    return mask


@dataclass(frozen=True)
class GlucoseTrace:
    """Per-patient series on the 5-minute grid; arrays share one length."""

    patient_id: str
    cgm: np.ndarray          # mg/dL, NaN where missing
    finger: np.ndarray       # sparse manual checks, NaN elsewhere
    bolus: np.ndarray        # insulin units delivered at each step
    carbs: np.ndarray        # grams ingested at each step
    missing: np.ndarray      # bool, True where cgm absent
    meal_flag: np.ndarray    # bool, True at meal steps
    step_minutes: int = STEP_MINUTES

    def __post_init__(self) -> None:
        n = len(self.cgm)
        for name in ("finger", "bolus", "carbs", "missing", "meal_flag"):
            if len(getattr(self, name)) != n:
                raise InvalidProfile(f"array length mismatch on {name}")
        if not np.array_equal(np.isnan(self.cgm), self.missing):
            raise InvalidProfile("cgm must be NaN exactly where missing is set")
        present = self.cgm[~self.missing]
        if present.size and (present.min() < CGM_MIN or present.max() > CGM_MAX):
            raise InvalidProfile("cgm values outside [20, 499] mg/dL")

    def __len__(self) -> int:
        return len(self.cgm)

    @property
    def context(self) -> np.ndarray:
        return postprandial_mask(self.meal_flag)

    def context_at(self, step: int) -> Context:
        return Context.POSTPRANDIAL if self.context[step] else Context.FASTING

    def slice_days(self, start_day: int, end_day: int) -> "GlucoseTrace":
        """Sub-trace covering [start_day, end_day) whole days.

        Day boundaries always fall in a fasting stretch (the latest meal plus
        its postprandial window ends well before midnight), so slicing never
        splits a postprandial window.
        """
        lo, hi = start_day * STEPS_PER_DAY, end_day * STEPS_PER_DAY
        return GlucoseTrace(
            patient_id=self.patient_id,
            cgm=self.cgm[lo:hi].copy(),
            finger=self.finger[lo:hi].copy(),
            bolus=self.bolus[lo:hi].copy(),
            carbs=self.carbs[lo:hi].copy(),
            missing=self.missing[lo:hi].copy(),
            meal_flag=self.meal_flag[lo:hi].copy(),
        )


@dataclass(frozen=True)
class PatientProfile:
    """Generator parameters; defaults give a plausible type-1 day profile."""

    base_glucose: float = 130.0
    circadian_amplitude: float = 14.0
    circadian_phase_minutes: float = 600.0
    carb_sensitivity: float = 1.15     # peak mg/dL rise per gram
    carb_tau_minutes: float = 50.0
    insulin_sensitivity: float = 9.0   # peak mg/dL drop per unit
    insulin_tau_minutes: float = 75.0
    insulin_delay_minutes: float = 20.0
    carb_ratio: float = 10.0           # grams covered per insulin unit
    # Carb counting is imperfect; the under-bolusing bias produces realistic
    # hyperglycemic excursions while the high tail still causes hypo dips.
    bolus_factor_range: tuple[float, float] = (0.6, 1.3)
    corrections_per_day: float = 1.5
    correction_dose_range: tuple[float, float] = (2.0, 6.0)
    carbs_range: tuple[float, float] = (30.0, 90.0)
    meal_windows: tuple[tuple[int, int], ...] = (
        (7 * 60, 9 * 60),
        (12 * 60, 14 * 60),
        (18 * 60, 20 * 60 + 30),
    )
    noise_sd: float = 5.0
    missing_rate: float = 0.02
    finger_checks_per_day: float = 3.0

    def validate(self) -> "PatientProfile":
        if self.base_glucose < CGM_MIN or self.base_glucose > CGM_MAX:
            raise InvalidProfile("base_glucose outside [20, 499]")
        for name in (
            "circadian_amplitude",
            "carb_sensitivity",
            "carb_tau_minutes",
            "insulin_sensitivity",
            "insulin_tau_minutes",
            "insulin_delay_minutes",
            "corrections_per_day",
            "noise_sd",
            "finger_checks_per_day",
        ):
            if getattr(self, name) < 0:
                raise InvalidProfile(f"{name} must be >= 0")
        if self.carb_ratio <= 0:
            raise InvalidProfile("carb_ratio must be > 0")
        if not 0 <= self.missing_rate < 1:
            raise InvalidProfile("missing_rate must be in [0, 1)")
        if self.carb_tau_minutes == 0 or self.insulin_tau_minutes == 0:
            raise InvalidProfile("response time constants must be positive")
        for lo, hi in self.meal_windows:
            if not 0 <= lo <= hi < 1440:
                raise InvalidProfile("meal windows must lie within one day")
        return self


def _impulse_kernel(minutes_after: np.ndarray, tau: float) -> np.ndarray:
    """Unit-peak first-order absorption response; peak at ``tau`` minutes."""
    u = np.maximum(minutes_after, 0.0) / tau
    return u * np.exp(1.0 - u)


def circadian_baseline(profile: PatientProfile, n_steps: int) -> np.ndarray:
    minutes = np.arange(n_steps) * STEP_MINUTES
    return profile.base_glucose + profile.circadian_amplitude * np.sin(
        2.0 * math.pi * (minutes - profile.circadian_phase_minutes) / 1440.0
    )


def synth_patient(
    seed: int, days: int, profile: PatientProfile | None = None
) -> GlucoseTrace:
    """Generate one patient's trace; deterministic in ``seed``.

    Raises:
        InvalidProfile
    """
    if days < 1:
        raise InvalidProfile("days must be >= 1")
    profile = (profile or PatientProfile()).validate()
    rng = np.random.default_rng(seed)
    n = days * STEPS_PER_DAY
    minutes = np.arange(n) * STEP_MINUTES

    carbs = np.zeros(n)
    bolus = np.zeros(n)
    meal_flag = np.zeros(n, dtype=bool)

    glucose = circadian_baseline(profile, n)
    for day in range(days):
        for lo, hi in profile.meal_windows:
            meal_minute = day * 1440 + rng.uniform(lo, hi)
            meal_step = int(meal_minute // STEP_MINUTES)
            grams = rng.uniform(*profile.carbs_range)
            carbs[meal_step] += grams
            meal_flag[meal_step] = True

            dose = grams / profile.carb_ratio * rng.uniform(*profile.bolus_factor_range)
            bolus_step = min(meal_step + 1, n - 1)
            bolus[bolus_step] += dose

            after_meal = minutes - meal_step * STEP_MINUTES
            glucose += (
                grams
                * profile.carb_sensitivity
                * _impulse_kernel(after_meal, profile.carb_tau_minutes)
            )
            after_bolus = (
                minutes - bolus_step * STEP_MINUTES - profile.insulin_delay_minutes
            )
            glucose -= (
                dose
                * profile.insulin_sensitivity
                * _impulse_kernel(after_bolus, profile.insulin_tau_minutes)
            )

    # Ad-hoc correction boluses at random times of day; the occasional stack
    # on a meal bolus is what pushes a trace into genuine hypoglycemia.
    n_corrections = int(rng.poisson(profile.corrections_per_day * days))
    for _ in range(n_corrections):
        corr_step = int(rng.integers(0, n))
        dose = rng.uniform(*profile.correction_dose_range)
        bolus[corr_step] += dose
        after_bolus = (
            minutes - corr_step * STEP_MINUTES - profile.insulin_delay_minutes
        )
        glucose -= (
            dose
            * profile.insulin_sensitivity
            * _impulse_kernel(after_bolus, profile.insulin_tau_minutes)
        )

    cgm = glucose + rng.normal(0.0, profile.noise_sd, n) if profile.noise_sd else glucose.copy()
    cgm = np.clip(cgm, CGM_MIN, CGM_MAX)

    missing = np.zeros(n, dtype=bool)
    budget = int(round(profile.missing_rate * n))
    while missing.sum() < budget:
        start = int(rng.integers(0, n))
        length = 1 + int(rng.geometric(0.25))
        missing[start : start + min(length, budget - int(missing.sum()))] = True
    cgm[missing] = np.nan

    finger = np.full(n, np.nan)
    n_checks = int(round(profile.finger_checks_per_day * days))
    if n_checks:
        check_steps = rng.choice(n, size=min(n_checks, n), replace=False)
        finger[check_steps] = np.clip(
            glucose[check_steps] + rng.normal(0.0, 3.0, len(check_steps)),
            CGM_MIN,
            CGM_MAX,
        )

    return GlucoseTrace(
        patient_id=f"synth-{seed}",
        cgm=cgm,
        finger=finger,
        bolus=bolus,
        carbs=carbs,
        missing=missing,
        meal_flag=meal_flag,
    )


def synth_cohort(
    seed: int, patients: int, days: int, profile: PatientProfile | None = None
) -> list[GlucoseTrace]:
    """Generate a cohort; patient k uses seed ``seed*1000 + k`` with a
    per-patient baseline drawn from the cohort seed so patients differ."""
    rng = np.random.default_rng(seed)
    base = (profile or PatientProfile()).validate()
    traces = []
    for k in range(patients):
        jittered = PatientProfile(
            base_glucose=float(rng.uniform(112.0, 145.0)),
            circadian_amplitude=float(rng.uniform(10.0, 18.0)),
            carb_sensitivity=base.carb_sensitivity * float(rng.uniform(0.85, 1.15)),
            insulin_sensitivity=base.insulin_sensitivity * float(rng.uniform(0.85, 1.15)),
            noise_sd=base.noise_sd,
            missing_rate=base.missing_rate,
        )
        trace = synth_patient(seed * 1000 + k, days, jittered)
        traces.append(replace(trace, patient_id=f"patient-{k + 1}"))
    return traces


# --- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class EvalMetrics:
    rmse: float
    mae: float
    n_samples: int

    def __post_init__(self) -> None:
        if self.rmse < self.mae - 1e-9:
            raise InsufficientData("rmse below mae is impossible")

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "n_samples": self.n_samples}


def metrics_from_errors(errors: np.ndarray) -> EvalMetrics:
    if errors.size == 0:
        raise InsufficientData("no prediction/truth pairs")
    return EvalMetrics(
        rmse=float(np.sqrt(np.mean(np.square(errors)))),
        mae=float(np.mean(np.abs(errors))),
        n_samples=int(errors.size),
    )


# --- CSV serialization -------------------------------------------------------

TRACE_COLUMNS = ("step", "cgm", "finger", "bolus", "carbs", "missing", "meal_flag", "context")


def save_trace(trace: GlucoseTrace, path: str | Path) -> None:
    context = trace.context
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_COLUMNS)
        for i in range(len(trace)):
            writer.writerow(
                [
                    i,
                    "" if trace.missing[i] else f"{trace.cgm[i]:.2f}",
                    "" if np.isnan(trace.finger[i]) else f"{trace.finger[i]:.2f}",
                    f"{trace.bolus[i]:.3f}",
                    f"{trace.carbs[i]:.2f}",
                    int(trace.missing[i]),
                    int(trace.meal_flag[i]),
                    "postprandial" if context[i] else "fasting",
                ]
            )


def load_trace(path: str | Path, patient_id: str | None = None) -> GlucoseTrace:
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            rows.append(row)
    if not rows:
        raise InsufficientData(f"{path} contains no steps")
    n = len(rows)
    cgm = np.full(n, np.nan)
    finger = np.full(n, np.nan)
    bolus = np.zeros(n)
    carbs = np.zeros(n)
    missing = np.zeros(n, dtype=bool)
    meal_flag = np.zeros(n, dtype=bool)
    for i, row in enumerate(rows):
        missing[i] = row["missing"] == "1"
        if row["cgm"]:
            cgm[i] = float(row["cgm"])
        if row["finger"]:
            finger[i] = float(row["finger"])
        bolus[i] = float(row["bolus"])
        carbs[i] = float(row["carbs"])
        meal_flag[i] = row["meal_flag"] == "1"
    return GlucoseTrace(
        patient_id=patient_id or path.stem,
        cgm=cgm,
        finger=finger,
        bolus=bolus,
        carbs=carbs,
        missing=missing,
        meal_flag=meal_flag,
    )
