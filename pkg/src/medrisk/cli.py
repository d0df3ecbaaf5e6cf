"""Command-line front end.

Subcommands:

* ``assess`` — score every vulnerability of a system file in isolation;
* ``propagate`` — rank end-to-end risks for an adversary profile;
* ``simulate`` — generate synthetic patient traces to CSV;
* ``attack`` — train the predictor and run evasion campaigns;
* ``compare-frameworks`` — emit the factor-coverage matrix.

Every command writes a JSON report (``--out``) and, where it applies, a CSV
side output plus PNG figures rendered alongside it. All randomness flows from
``--seed``. Commands exit 0 on success and 1 on any error, naming the
offending file or field. ``MEDRISK_LOG`` controls log verbosity.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import time
from pathlib import Path

import click

from . import __version__, figures, reporting
from .errors import InputFileError, MedRiskError
from .evasion import AttackBudget, AttackScenario, attack_campaign
from .glucose import Context, GlucoseTrace, load_trace, save_trace, synth_cohort
from .predictor import (
    PredictorConfig,
    evaluate,
    evaluate_persistence,
    load_predictor,
    save_predictor,
    train,
)
from .propagation import AdversaryProfile, Duration, Reach, rank_system_risks
from .risk_vector import parse_vector
from .scoring import coverage_table_csv, coverage_table_text
from .system_model import load_system

logger = logging.getLogger("medrisk")


def _setup_logging() -> None:
    level = os.environ.get("MEDRISK_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _emit_report(report: dict, out: str | None) -> None:
    if out:
        reporting.write_report(report, out)
        logger.info("report written to %s", out)
    else:
        click.echo(json.dumps(report, indent=2, sort_keys=True))


def _figure_dir(out: str | None, fig_dir: str | None, no_figures: bool) -> Path | None:
    if no_figures:
        return None
    if fig_dir:
        return Path(fig_dir)
    if out:
        return Path(out).resolve().parent
    return None


@click.group()
@click.version_option(version=__version__, prog_name="medrisk")
def main() -> None:
    """Risk analysis toolkit for ML-enabled connected medical systems."""
    _setup_logging()


@main.command()
@click.option("--system", "system_path", required=True, type=click.Path(exists=True))
@click.option(
    "--vector",
    "vectors",
    multiple=True,
    help="Override/supply an assessment as VID=MLMED:1.0/... (repeatable).",
)
@click.option("--out", type=click.Path(), default=None, help="Report JSON path.")
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--fig-dir", type=click.Path(), default=None)
@click.option("--no-figures", is_flag=True, default=False)
def assess(system_path, vectors, out, csv_path, fig_dir, no_figures) -> None:
    """Score each vulnerability of a system file in isolation."""
    started = time.perf_counter()
    try:
        graph = _load_graph(system_path)
        overrides = {}
        for spec in vectors:
            vid, sep, vector_string = spec.partition("=")
            if not sep:
                raise MedRiskError(f"--vector must look like VID=STRING, got {spec!r}")
            try:
                overrides[vid] = parse_vector(vector_string)
            except MedRiskError as exc:
                raise MedRiskError(f"vulnerability {vid!r}: {exc}") from None
        payload = reporting.assess_payload(graph, overrides)
    except MedRiskError as exc:
        _fail(exc)

    report = reporting.build_report(
        "assess",
        {"system": str(system_path), "vector_overrides": sorted(overrides)},
        payload,
        {"wall_seconds": time.perf_counter() - started},
    )
    _emit_report(report, out)
    if csv_path:
        reporting.write_assess_csv(payload, csv_path)
    target = _figure_dir(out, fig_dir, no_figures)
    if target:
        figures.assessment_figure(
            [(e["vid"], e["score"]["total"]) for e in payload["assessments"]],
            target / "assess_scores.png",
        )


def _load_graph(path):
    try:
        return load_system(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(str(path), str(exc)) from None


@main.command()
@click.option("--system", "system_path", required=True, type=click.Path(exists=True))
@click.option(
    "--reach",
    type=click.Choice(["local", "remote", "any"]),
    default="any",
    show_default=True,
)
@click.option(
    "--duration",
    type=click.Choice(["brief", "sustained"]),
    default="sustained",
    show_default=True,
)
@click.option("--chain", "max_chain", type=int, default=2, show_default=True,
              help="Maximum number of vulnerabilities combined per capability.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--fig-dir", type=click.Path(), default=None)
@click.option("--no-figures", is_flag=True, default=False)
def propagate(system_path, reach, duration, max_chain, out, csv_path, fig_dir, no_figures):
    """Rank end-to-end ML-engine risks for an adversary profile."""
    started = time.perf_counter()
    try:
        graph = _load_graph(system_path)
        profile = AdversaryProfile(reach=Reach(reach), duration=Duration(duration))
        entries = rank_system_risks(graph, profile, max_chain=max_chain)
    except MedRiskError as exc:
        _fail(exc)

    payload = reporting.propagate_payload(entries, reach, duration, max_chain)
    report = reporting.build_report(
        "propagate",
        {
            "system": str(system_path),
            "reach": reach,
            "duration": duration,
            "chain": max_chain,
        },
        payload,
        {"wall_seconds": time.perf_counter() - started},
    )
    _emit_report(report, out)
    if csv_path:
        reporting.write_ranking_csv(entries, csv_path)
    target = _figure_dir(out, fig_dir, no_figures)
    if target and entries:
        figures.ranking_figure(entries, target / "propagate_ranking.png")


@main.command()
@click.option("--patients", type=int, default=5, show_default=True)
@click.option("--days", type=int, default=14, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None, help="Report JSON path.")
@click.option("--no-figures", is_flag=True, default=False)
def simulate(patients, days, seed, out_dir, out, no_figures):
    """Generate synthetic patient traces to CSV files."""
    started = time.perf_counter()
    try:
        traces = synth_cohort(seed, patients, days)
    except MedRiskError as exc:
        _fail(exc)

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    stats, files = [], []
    for trace in traces:
        path = out_path / f"{trace.patient_id}.csv"
        save_trace(trace, path)
        files.append(str(path))
        observed = trace.cgm[~trace.missing]
        stats.append(
            {
                "patient_id": trace.patient_id,
                "steps": len(trace),
                "mean_cgm": round(float(observed.mean()), 3),
                "min_cgm": round(float(observed.min()), 3),
                "max_cgm": round(float(observed.max()), 3),
                "missing_fraction": round(float(trace.missing.mean()), 5),
                "meals": int(trace.meal_flag.sum()),
            }
        )

    report = reporting.build_report(
        "simulate",
        {"patients": patients, "days": days, "seed": seed, "out_dir": str(out_dir)},
        reporting.simulate_payload(stats, files),
        {"wall_seconds": time.perf_counter() - started},
    )
    _emit_report(report, out)
    if not no_figures:
        figures.trace_figure(traces[0], out_path / "trace_overview.png")


@main.command()
@click.option("--synth/--no-synth", default=True, show_default=True,
              help="Generate synthetic traces (otherwise pass --trace files).")
@click.option("--trace", "trace_paths", multiple=True, type=click.Path(exists=True))
@click.option("--patients", type=int, default=5, show_default=True)
@click.option("--days", type=int, default=14, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option(
    "--scenario",
    type=click.Choice(["fasting", "postprandial", "both"]),
    default="both",
    show_default=True,
)
@click.option("--budget-steps", type=int, default=6, show_default=True)
@click.option("--beam", type=int, default=8, show_default=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--hidden", type=int, default=16, show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True,
              help="Leading fraction of days used for training; the rest is attacked.")
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="Load a trained predictor instead of training.")
@click.option("--model-out", type=click.Path(), default=None,
              help="Save the trained predictor parameters.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--fig-dir", type=click.Path(), default=None)
@click.option("--no-figures", is_flag=True, default=False)
def attack(
    synth,
    trace_paths,
    patients,
    days,
    seed,
    scenario,
    budget_steps,
    beam,
    epochs,
    hidden,
    train_fraction,
    model_path,
    model_out,
    out,
    csv_path,
    fig_dir,
    no_figures,
):
    """Train the glucose predictor and run evasion campaigns against it."""
    started = time.perf_counter()
    timings: dict[str, float] = {}
    try:
        if synth and not trace_paths:
            traces = synth_cohort(seed, patients, days)
        else:
            traces = [load_trace(p) for p in trace_paths]
            if not traces:
                raise MedRiskError("no traces given; use --synth or --trace")

        train_traces, test_traces = _split_traces(traces, train_fraction)

        cfg = PredictorConfig(seed=seed, epochs=epochs, hidden_size=hidden)
        t0 = time.perf_counter()
        if model_path:
            predictor = load_predictor(model_path)
        else:
            predictor = train(train_traces, cfg)
        timings["train_seconds"] = time.perf_counter() - t0
        if model_out:
            save_predictor(predictor, model_out)

        model_metrics = {
            "test": evaluate(predictor, test_traces).to_dict(),
            "persistence_baseline": evaluate_persistence(
                test_traces, predictor.config
            ).to_dict(),
            "final_train_loss": predictor.loss_history[-1]
            if predictor.loss_history
            else None,
        }

        budget = AttackBudget(max_modified_steps=budget_steps, beam_width=beam)
        contexts = {
            "fasting": Context.FASTING,
            "postprandial": Context.POSTPRANDIAL,
        }
        selected = list(contexts) if scenario == "both" else [scenario]
        campaigns = {}
        t0 = time.perf_counter()
        for name in selected:
            campaigns[name] = attack_campaign(
                predictor, test_traces, AttackScenario(contexts[name]), budget
            )
        timings["campaign_seconds"] = time.perf_counter() - t0
    except MedRiskError as exc:
        _fail(exc)

    payload = reporting.attack_payload(
        campaigns,
        model_metrics,
        {"max_modified_steps": budget_steps, "beam_width": beam},
        {
            "patients": len(traces),
            "days": days if synth else None,
            "seed": seed,
            "train_fraction": train_fraction,
            "test_windows": sum(
                c.aggregate.n_normal + c.aggregate.n_hypo for c in campaigns.values()
            ),
        },
    )
    timings["wall_seconds"] = time.perf_counter() - started
    report = reporting.build_report(
        "attack",
        {
            "scenario": scenario,
            "seed": seed,
            "patients": patients,
            "days": days,
            "budget_steps": budget_steps,
            "beam": beam,
            "epochs": epochs,
            "hidden": hidden,
            "train_fraction": train_fraction,
        },
        payload,
        timings,
    )
    _emit_report(report, out)
    if csv_path:
        reporting.write_campaign_csv(campaigns, csv_path)
    target = _figure_dir(out, fig_dir, no_figures)
    if target and campaigns:
        figures.campaign_rates_figure(campaigns, target / "attack_rates.png")
        figures.campaign_rmse_figure(campaigns, target / "attack_rmse.png")


def _split_traces(
    traces: list[GlucoseTrace], train_fraction: float
) -> tuple[list[GlucoseTrace], list[GlucoseTrace]]:
    """Split each trace at a day boundary into train/test segments."""
    train, test = [], []
    for trace in traces:
        total_days = len(trace) // 288
        if total_days < 2:
            raise MedRiskError(
                f"trace {trace.patient_id} needs >= 2 days to split for attack"
            )
        cut = min(max(int(round(total_days * train_fraction)), 1), total_days - 1)
        train.append(trace.slice_days(0, cut))
        test.append(trace.slice_days(cut, total_days))
    return train, test


@main.command("compare-frameworks")
@click.option("--out", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--fig-dir", type=click.Path(), default=None)
@click.option("--no-figures", is_flag=True, default=False)
def compare_frameworks(out, csv_path, fig_dir, no_figures):
    """Emit the factor-coverage comparison of established techniques."""
    started = time.perf_counter()
    payload = reporting.compare_payload()
    report = reporting.build_report(
        "compare-frameworks",
        {},
        payload,
        {"wall_seconds": time.perf_counter() - started},
    )
    _emit_report(report, out)
    click.echo(coverage_table_text(), nl=False)
    if csv_path:
        Path(csv_path).write_text(coverage_table_csv(), encoding="utf-8")
    target = _figure_dir(out, fig_dir, no_figures)
    if target:
        figures.coverage_figure(target / "framework_coverage.png")


if __name__ == "__main__":
    main()
