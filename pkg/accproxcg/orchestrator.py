"""
Orchestrator for accproxcg.

This module loads experiment specs, prepares the dataset, runs every
(algorithm, seed) pair concurrently in worker threads, resolves sub-optimality
against the best objective seen, and writes the metric CSV with its diagnostics sidecar.
"""

import asyncio
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Awaitable, Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from accproxcg.config import AppConfig
from accproxcg.data_io import (
    SparseDataset,
    is_synthetic_path,
    load_libsvm,
    make_synthetic_classification,
    normalize_rows_l2,
    parse_synthetic_path,
)
from accproxcg.errors import AccProxCGError, DivergenceError, SpecError
from accproxcg.losses import MarginLossProblem, lipschitz_constant
from accproxcg.optimizers import CG_METHODS, OPTIMIZERS, get_optimizer
from accproxcg.presets import is_known_preset, preset_config, resolve_lambda
from accproxcg.reporting import diagnostics_path, emit_csv, emit_diagnostics, summarize
from accproxcg.schemas import (
    DatasetSpec,
    ExperimentSpec,
    MessageType,
    MetricRow,
    OptimizerConfig,
    RunTrace,
    TheoryInputs,
)
from accproxcg.theory import empirical_delta, phi, theory_report

logger = logging.getLogger("accproxcg.orchestrator")

ProgressCallback = Callable[[int, int, str], Awaitable[None]]


@dataclass(frozen=True)
class RunPlan:
    """One (algorithm, seed) pair ready to execute."""

    run_id: str
    label: str
    algorithm: str
    seed: int
    config: OptimizerConfig


class ExperimentResult(BaseModel):
    """Everything an experiment produced."""

    rows: List[MetricRow] = Field(default_factory=list)
    traces: List[RunTrace] = Field(default_factory=list)
    summary: List[Dict[str, Any]] = Field(default_factory=list)
    output_path: Optional[str] = None
    diagnostics: List[Dict[str, Any]] = Field(default_factory=list)
    diagnostics_path: Optional[str] = None
    lam: float = 0.0
    p_star: float = math.nan
    failures: int = 0

    @property
    def all_failed(self) -> bool:
        return bool(self.traces) and self.failures == len(self.traces)


def _format_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_spec(document: Dict[str, Any]) -> ExperimentSpec:
    """Validate a spec document.

    Raises:
        SpecError: Schema violations (with field paths), unknown algorithms or presets
    """
    try:
        spec = ExperimentSpec.model_validate(document)
    except ValidationError as e:
        raise SpecError(f"invalid experiment spec: {_format_validation_error(e)}") from e

    for i, entry in enumerate(spec.runs):
        if entry.algorithm not in OPTIMIZERS:
            raise SpecError(
                f"runs.{i}.algorithm: unknown algorithm {entry.algorithm!r}; "
                f"known: {', '.join(sorted(OPTIMIZERS))}"
            )
        if entry.preset is not None and not is_known_preset(entry.preset):
            raise SpecError(f"runs.{i}.preset: unknown preset {entry.preset!r}")
    return spec


def load_spec(path: str) -> ExperimentSpec:
    """Read and validate a JSON experiment spec.

    Raises:
        SpecError: Unreadable JSON or an invalid spec
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: not valid JSON ({e})") from e
    return parse_spec(document)


def load_dataset(spec: DatasetSpec) -> SparseDataset:
    """Load (or generate) and normalize the experiment dataset."""
    if is_synthetic_path(spec.path):
        dataset = make_synthetic_classification(**parse_synthetic_path(spec.path))
    else:
        dataset = load_libsvm(spec.path, n_features=spec.n_features, label_map=spec.label_map)
    if spec.normalize:
        dataset = normalize_rows_l2(dataset)
    logger.info(f"Loaded {dataset.name}: n={dataset.n}, d={dataset.d}")
    return dataset


def plan_runs(spec: ExperimentSpec, dataset: SparseDataset) -> List[RunPlan]:
    """Expand the spec into runs in (entry, seed) order.

    Raises:
        SpecError: A preset or override does not fit its algorithm
    """
    L = lipschitz_constant(spec.loss)
    plans = []
    for entry in spec.runs:
        label = entry.label or (
            f"{entry.algorithm}:{entry.preset}" if entry.preset else entry.algorithm
        )
        for seed in spec.seeds:
            settings = {"epochs": spec.epochs, "metric_eta": spec.metric_eta, "seed": seed}
            settings.update(entry.overrides)
            settings["seed"] = seed
            if entry.preset is not None:
                _, config = preset_config(
                    entry.preset, dataset.n, L, algorithm=entry.algorithm, **settings
                )
            else:
                try:
                    config = OptimizerConfig(**settings)
                except ValidationError as e:
                    raise SpecError(
                        f"{label}: invalid settings: {_format_validation_error(e)}"
                    ) from e
            plans.append(
                RunPlan(
                    run_id=f"{label}-s{seed}",
                    label=label,
                    algorithm=entry.algorithm,
                    seed=seed,
                    config=config,
                )
            )
    return plans


def execute_run(
    plan: RunPlan, dataset: SparseDataset, spec: ExperimentSpec, lam: float
) -> Tuple[RunTrace, bool]:
    """Run one plan on its own problem instance.

    Returns:
        Tuple[RunTrace, bool]: The trace and whether the run failed
    """
    problem = MarginLossProblem(dataset, spec.loss, lam)
    try:
        optimizer = get_optimizer(plan.algorithm, plan.config)
        return optimizer.run(problem), False
    except DivergenceError as e:
        trace = e.trace or RunTrace(algorithm=plan.algorithm, status="failed", error=str(e))
        return trace, True
    except AccProxCGError as e:
        logger.error(f"Run {plan.run_id} failed: {e}")
        trace = RunTrace(algorithm=plan.algorithm, status="failed", error=str(e))
        trace.add_message("orchestrator", MessageType.ERROR, str(e))
        return trace, True


def build_rows(
    plans: List[RunPlan],
    outcomes: List[Tuple[RunTrace, bool]],
    spec: ExperimentSpec,
    dataset: SparseDataset,
) -> Tuple[List[MetricRow], float]:
    """Flatten traces into metric rows and fill in sub-optimality.

    A failed run contributes its recorded epochs plus one row of NaN metrics.

    Returns:
        Tuple[List[MetricRow], float]: Rows and the best objective P*
    """
    raw: List[Dict[str, Any]] = []
    for plan, (trace, failed) in zip(plans, outcomes):
        base = {
            "run_id": plan.run_id,
            "algo": plan.label,
            "dataset": dataset.name,
            "loss": spec.loss.value,
            "seed": plan.seed,
        }
        for record in trace.records:
            raw.append(
                {
                    **base,
                    "epoch": record.epoch,
                    "effective_passes": record.effective_passes,
                    "objective": record.objective,
                    "gmap_sq": record.gmap_sq,
                    "ls_calls": record.ls_calls,
                    "fallback_count": record.fallback_count,
                    "wall_ms": record.wall_ms,
                }
            )
        if failed:
            last = trace.final
            raw.append(
                {
                    **base,
                    "epoch": last.epoch + 1 if last else 0,
                    "effective_passes": last.effective_passes if last else 0.0,
                    "objective": math.nan,
                    "gmap_sq": math.nan,
                    "ls_calls": last.ls_calls if last else 0,
                    "fallback_count": last.fallback_count if last else 0,
                    "wall_ms": last.wall_ms if last else 0.0,
                }
            )

    finite = [r["objective"] for r in raw if math.isfinite(r["objective"])]
    p_star = min(finite) if finite else math.nan
    rows = [
        MetricRow(
            **r,
            subopt=r["objective"] - p_star if math.isfinite(r["objective"]) else math.nan,
        )
        for r in raw
    ]
    return rows, p_star


def _theory_inputs(
    plan: RunPlan, trace: RunTrace, n: int, L: float
) -> Tuple[Optional[TheoryInputs], Optional[str]]:
    if plan.algorithm not in CG_METHODS:
        return None, "fixed-step method"
    if trace.eta1 is None:
        return None, "no step taken"
    if not 0.0 < trace.beta_hat < 1.0:
        return None, f"beta_hat {trace.beta_hat:.4g} outside (0, 1)"
    cfg = plan.config
    try:
        inputs = TheoryInputs(
            m=cfg.epoch_length,
            b=min(cfg.batch_size, n),
            n=n,
            eta1=trace.eta1,
            # realised steps lie in [eta1, max(eta2, eta_fixed)]
            eta2=max(cfg.eta2, cfg.eta_fixed or 0.0),
            gamma=cfg.gamma,
            beta_hat=trace.beta_hat,
            alpha=phi(cfg.c2),
            sigma=math.sqrt(trace.sigma_sq),
            L=L,
            t=cfg.switch_frequency,
        )
    except (ValidationError, AccProxCGError) as e:
        return None, f"inputs out of range: {e}"
    return inputs, None


def run_diagnostics(
    plans: List[RunPlan],
    traces: List[RunTrace],
    spec: ExperimentSpec,
    dataset: SparseDataset,
    p_star: float,
) -> List[Dict[str, Any]]:
    """Measured diagnostics of every run and the rate constants they imply.

    beta_hat, eta1 and sigma^2 come from the trace. For the conjugate-gradient methods
    with beta_hat in (0, 1) they are fed to ``empirical_delta`` (against the best
    objective ``p_star``) and ``theory_report``; the comparison is report-only.

    Returns:
        List[Dict[str, Any]]: One entry per run, in plan order
    """
    L = lipschitz_constant(spec.loss)
    entries = []
    for plan, trace in zip(plans, traces):
        entry: Dict[str, Any] = {
            "run_id": plan.run_id,
            "algo": plan.label,
            "status": trace.status,
            "beta_hat": trace.beta_hat,
            "eta1": trace.eta1,
            "sigma_sq": trace.sigma_sq,
            "restarts": trace.restarts,
            "ascent_resets": trace.ascent_resets,
            "delta": None,
            "delta_st": None,
            "theory": None,
            "note": None,
        }
        inputs, entry["note"] = _theory_inputs(plan, trace, dataset.n, L)
        if inputs is not None:
            objectives = [r.objective for r in trace.records if math.isfinite(r.objective)]
            delta = 0.0
            if objectives and math.isfinite(p_star):
                delta, entry["delta_st"] = empirical_delta(objectives, p_star, inputs)
                entry["delta"] = delta
            try:
                entry["theory"] = theory_report(inputs, delta=delta)
            except AccProxCGError as e:
                entry["note"] = str(e)
        entries.append(entry)
    return entries


async def run_experiment(
    spec: ExperimentSpec,
    config: Optional[AppConfig] = None,
    progress_callback: Optional[ProgressCallback] = None,
    dataset: Optional[SparseDataset] = None,
) -> ExperimentResult:
    """Run every (algorithm, seed) pair of an experiment and write its CSV and diagnostics.

    Args:
        spec: Validated experiment spec
        config: Machine settings (output directory override, worker count)
        progress_callback: Awaited after each finished run with (done, total, run_id)
        dataset: Already loaded dataset; loaded from the spec when None

    Returns:
        ExperimentResult: Rows, traces, summary and the CSV path
    """
    config = config or AppConfig()
    if dataset is None:
        dataset = load_dataset(spec.dataset)
    lam = resolve_lambda(spec.lam, dataset.n, dataset.d)
    plans = plan_runs(spec, dataset)
    logger.info(f"Running {len(plans)} runs with lambda={lam:.6g}, workers={config.max_workers}")

    semaphore = asyncio.Semaphore(max(1, config.max_workers))
    done = 0

    async def run_one(plan: RunPlan) -> Tuple[RunTrace, bool]:
        nonlocal done
        async with semaphore:
            outcome = await asyncio.to_thread(execute_run, plan, dataset, spec, lam)
        done += 1
        if outcome[1]:
            logger.warning(f"Run {plan.run_id} failed: {outcome[0].error}")
        if progress_callback:
            try:
                await progress_callback(done, len(plans), plan.run_id)
            except Exception as e:
                logger.error(f"Error in progress callback: {e}")
        return outcome

    outcomes = await asyncio.gather(*(run_one(plan) for plan in plans))

    rows, p_star = build_rows(plans, list(outcomes), spec, dataset)
    output_path = emit_csv(rows, config.resolve_output_path(spec.output))
    failures = sum(1 for _, failed in outcomes if failed)
    traces = [trace for trace, _ in outcomes]
    diagnostics = run_diagnostics(plans, traces, spec, dataset, p_star)
    sidecar = emit_diagnostics(diagnostics, diagnostics_path(output_path))

    return ExperimentResult(
        rows=rows,
        traces=traces,
        summary=summarize(rows),
        output_path=output_path,
        diagnostics=diagnostics,
        diagnostics_path=sidecar,
        lam=lam,
        p_star=p_star,
        failures=failures,
    )
