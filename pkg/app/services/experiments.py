"""
Experiment runners behind the CLI: synthetic lambda sweeps on the B-spline
test function, the census classification pipeline and the transform
benchmark. Every runner returns an ExperimentResult and writes its tables
with pandas.
"""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.anova.grouped_index import Basis, GroupedIndexSet, TermSet, build_term_superset, term_id
from app.anova.grouped_transform import NodeSet, TransformMethod, TransformPlan
from app.anova.model import lambda_sweep, refit_index_set, l2_error, solve
from app.anova.network import emit_anova_network
from app.anova.sensitivity import FitResult, detect_active_set
from app.anova.testfun import DIMENSION, active_terms, sample_testfun, testfun_oracle
from app.anova.weights import WeightFunction
from app.connectors.census import fold_datasets, kfold, load_and_preprocess, split
from app.core.config import Settings, get_settings
from app.core.errors import ConfigurationError, DatasetError
from app.models.anova import ActiveSetSpec, SolverKind
from app.models.dataset import ClassificationReport, DatasetRecipe
from app.models.experiment import ExperimentConfig, ExperimentKind
from app.services.classification import classify_and_score

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    tables: Dict[str, pd.DataFrame]
    summary: Dict[str, Any] = field(default_factory=dict)
    paths: List[Path] = field(default_factory=list)


def plan_options(settings: Settings, threads: int) -> Dict[str, Any]:
    return {
        "method": TransformMethod(settings.transform_method),
        "oversampling": settings.oversampling,
        "window_cutoff": settings.window_cutoff,
        "window_family": settings.window,
        "threads": threads,
    }


def _threads(config: ExperimentConfig, settings: Settings) -> int:
    return config.threads or settings.threads


def _run_tasks(task: Callable[[int], Any], count: int, threads: int) -> List[Any]:
    """Run task(0..count-1) on a pool; results come back in index order."""
    if threads <= 1 or count <= 1:
        return [task(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(threads, count), thread_name_prefix="experiment") as pool:
        return list(pool.map(task, range(count)))


def sweep_table(lambdas: Sequence[float], value_name: str, values: np.ndarray,
                term_set: TermSet, gsi: np.ndarray) -> pd.DataFrame:
    """lambda, the value column, then one GSI column per non-constant term."""
    table = pd.DataFrame({"lambda": np.asarray(lambdas, dtype=float), value_name: values})
    terms = [(i, u) for i, u in enumerate(term_set) if u]
    gsi_columns = pd.DataFrame(
        {term_id(u): gsi[:, i] for i, u in terms}, index=table.index
    )
    return pd.concat([table, gsi_columns], axis=1)


def write_table(table: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.10g")
    logger.info("Wrote %d rows to %s", len(table), path)
    return path


def _write_network(fit: FitResult, path: Optional[Path]) -> Optional[Path]:
    if path is None:
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit_anova_network(fit))
    logger.info("Wrote ANOVA network to %s", path)
    return path


# ----------------------------------------------------------------------------
# Synthetic experiments
# ----------------------------------------------------------------------------

@dataclass
class _RepetitionOutcome:
    errors: np.ndarray
    gsi: np.ndarray
    active_sets: List[TermSet]
    nonzero_sets: List[TermSet]
    fits: List[FitResult]


def run_synthetic(config: ExperimentConfig, settings: Optional[Settings] = None,
                  write: bool = True) -> ExperimentResult:
    """Average the relative L2 error and the GSIs over repetitions, one row per lambda.

    LSQR runs are scored after refitting on the detected active set, FISTA
    runs directly on the full superset fit.
    """
    if config.experiment not in (ExperimentKind.SYNTHETIC_LSQR, ExperimentKind.SYNTHETIC_FISTA):
        raise ConfigurationError(f"run_synthetic cannot run {config.experiment.value}")
    settings = settings or get_settings()
    solver = SolverKind.LSQR if config.experiment is ExperimentKind.SYNTHETIC_LSQR else SolverKind.FISTA
    bandwidths = config.per_order_bandwidths()
    d_s = config.superposition_threshold()
    index_set = GroupedIndexSet.from_orders(build_term_superset(DIMENSION, d_s), bandwidths, Basis.EXPONENTIAL)
    weights = WeightFunction.sobolev(config.smoothness)
    spec = ActiveSetSpec(thresholds=config.thresholds())
    lambdas = config.lambda_grid()
    oracle = testfun_oracle()
    threads = _threads(config, settings)
    # repetitions share the pool; transforms inside a repetition then run serially
    inner = 1 if config.reps > 1 and threads > 1 else threads
    options = plan_options(settings, inner)
    seeds = np.random.SeedSequence(config.seed).spawn(config.reps)
    logger.info("synthetic %s: %d terms, %d frequencies, %d lambdas, %d repetitions",
                solver.value, len(index_set.term_set), index_set.total, len(lambdas), config.reps)

    def repetition(r: int) -> _RepetitionOutcome:
        nodes, y = sample_testfun(config.samples, config.noise, np.random.default_rng(seeds[r]),
                                  config.noise_mode)
        plan = TransformPlan.create(nodes, index_set, **options)
        fits = lambda_sweep(plan, y, solver, lambdas, weights, warm_start=config.warm_start,
                            lsqr_config=config.lsqr, fista_config=config.fista)
        errors, active_sets, nonzero_sets = [], [], []
        for fit in fits:
            active = detect_active_set(fit, spec)
            active_sets.append(active)
            nonzero_sets.append(fit.nonzero_terms())
            if solver is SolverKind.LSQR:
                refit_set = refit_index_set(index_set, active, config.refit_bandwidths)
                refit_plan = TransformPlan.create(nodes, refit_set, **options)
                refit = solve(refit_plan, y, solver, fit.lam, weights, config.lsqr, config.fista)
                errors.append(l2_error(refit.coefficients, oracle))
            else:
                errors.append(l2_error(fit.coefficients, oracle))
        logger.info("repetition %d/%d done, best error %.4g", r + 1, config.reps, min(errors))
        return _RepetitionOutcome(np.array(errors), np.array([f.gsi for f in fits]),
                                  active_sets, nonzero_sets, fits if r == 0 else [])

    outcomes = _run_tasks(repetition, config.reps, threads)
    errors = np.mean([o.errors for o in outcomes], axis=0)
    gsi = np.mean([o.gsi for o in outcomes], axis=0)
    table = sweep_table(lambdas, "L2error", errors, index_set.term_set, gsi)

    best = int(np.argmin(errors))
    truth = active_terms()
    summary = {
        "experiment": config.experiment.value,
        "solver": solver.value,
        "frequencies": index_set.total,
        "best_lambda": float(lambdas[best]),
        "best_L2error": float(errors[best]),
        "active_set_recovered": [o.active_sets[best] == truth for o in outcomes],
        "nonzero_groups_recovered": [o.nonzero_sets[best] == truth for o in outcomes],
    }
    logger.info("best averaged L2 error %.4g at lambda %.4g", errors[best], lambdas[best])

    result = ExperimentResult({"sweep": table}, summary)
    if write:
        result.paths.append(write_table(table, config.output_path(settings.output_dir)))
        network = _write_network(outcomes[0].fits[best], config.emit_network)
        if network:
            result.paths.append(network)
    return result


# ----------------------------------------------------------------------------
# Census pipeline
# ----------------------------------------------------------------------------

CENSUS_VARIANTS = ("lsqr", "lsqr_refit", "fista")


def run_census(config: ExperimentConfig, csv_path: Optional[Path] = None,
               settings: Optional[Settings] = None, write: bool = True) -> ExperimentResult:
    """Cross-validated accuracy per lambda for LSQR, LSQR with active-set refit, and FISTA."""
    settings = settings or get_settings()
    csv_path = csv_path or config.census_csv or settings.census_csv
    if csv_path is None:
        raise DatasetError("No census CSV given (set ANOVA_CENSUS_CSV or pass --census-csv)")
    recipe = DatasetRecipe.from_json(config.recipe) if config.recipe else DatasetRecipe.census()
    dataset = load_and_preprocess(csv_path, recipe)

    bandwidths = config.per_order_bandwidths()
    d_s = config.superposition_threshold()
    index_set = GroupedIndexSet.from_orders(build_term_superset(dataset.d, d_s), bandwidths, Basis.COSINE)
    refit_bandwidths = config.census_refit_bandwidths()
    weights = WeightFunction.sobolev(config.smoothness)
    spec = ActiveSetSpec(thresholds=config.thresholds())
    lambdas = config.lambda_grid()
    threads = _threads(config, settings)

    if config.folds == 1:
        partitions = [split(dataset, config.train_fraction, config.seed)]
    else:
        partitions = [fold_datasets(dataset, train, test)
                      for train, test in kfold(dataset, config.folds, config.seed)]
    inner = 1 if len(partitions) > 1 and threads > 1 else threads
    options = plan_options(settings, inner)
    logger.info("census: %d rows, %d features, %d terms, %d frequencies, %d partitions",
                len(dataset), dataset.d, len(index_set.term_set), index_set.total, len(partitions))

    def fold(i: int) -> Dict[str, Any]:
        train, test = partitions[i]
        plan = TransformPlan.create(train.features, index_set, **options)
        y = train.labels.astype(float)
        reports: Dict[str, List[ClassificationReport]] = {v: [] for v in CENSUS_VARIANTS}
        gsi: Dict[str, List[np.ndarray]] = {"lsqr": [], "fista": []}
        active_sizes = []
        for solver in (SolverKind.LSQR, SolverKind.FISTA):
            fits = lambda_sweep(plan, y, solver, lambdas, weights, warm_start=config.warm_start,
                                lsqr_config=config.lsqr, fista_config=config.fista)
            for fit in fits:
                reports[solver.value].append(
                    classify_and_score(fit.coefficients, test.features, test.labels, **options)
                )
                gsi[solver.value].append(fit.gsi)
                if solver is SolverKind.LSQR:
                    active = detect_active_set(fit, spec)
                    active_sizes.append(len(active))
                    refit_set = refit_index_set(index_set, active, refit_bandwidths)
                    refit_plan = TransformPlan.create(plan.node_set, refit_set, **options)
                    refit = solve(refit_plan, y, solver, fit.lam, weights, config.lsqr, config.fista)
                    reports["lsqr_refit"].append(
                        classify_and_score(refit.coefficients, test.features, test.labels, **options)
                    )
        logger.info("partition %d/%d done", i + 1, len(partitions))
        return {"reports": reports, "gsi": gsi, "active_sizes": active_sizes}

    outcomes = _run_tasks(fold, len(partitions), threads)

    tables: Dict[str, pd.DataFrame] = {}
    summary: Dict[str, Any] = {
        "rows": len(dataset),
        "features": dataset.d,
        "terms": len(index_set.term_set),
        "frequencies": index_set.total,
        "partitions": len(partitions),
        "variants": {},
    }
    for variant in CENSUS_VARIANTS:
        combined = [
            ClassificationReport.combine([o["reports"][variant][j] for o in outcomes])
            for j in range(len(lambdas))
        ]
        accuracy = np.array([c.accuracy for c in combined])
        source = "fista" if variant == "fista" else "lsqr"
        gsi = np.mean([o["gsi"][source] for o in outcomes], axis=0)
        tables[variant] = sweep_table(lambdas, "accuracy", accuracy, index_set.term_set, gsi)
        best = int(np.argmax(accuracy))
        summary["variants"][variant] = {
            "best_lambda": float(lambdas[best]),
            "best_accuracy": float(accuracy[best]),
            "fold_accuracies": combined[best].fold_accuracies,
        }
        logger.info("census %s: best accuracy %.2f%% at lambda %.4g", variant, accuracy[best], lambdas[best])
    best_refit = int(np.argmax(tables["lsqr_refit"]["accuracy"].to_numpy()))
    sizes = [int(o["active_sizes"][best_refit]) for o in outcomes]
    summary["active_terms_per_partition"] = sizes
    summary["active_terms"] = float(np.mean(sizes))

    result = ExperimentResult(tables, summary)
    if write:
        base = config.output_path(settings.output_dir)
        for variant, table in tables.items():
            result.paths.append(write_table(table, base.with_name(f"{base.stem}_{variant}{base.suffix}")))
        report_path = base.with_name(f"{base.stem}_report.json")
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(summary, indent=2))
        result.paths.append(report_path)
    return result


# ----------------------------------------------------------------------------
# Transform benchmark
# ----------------------------------------------------------------------------

BENCH_COLUMNS = ["d", "d_s", "N", "M", "method", "seconds", "max_error"]


def run_transform_bench(config: ExperimentConfig, settings: Optional[Settings] = None,
                        write: bool = True) -> ExperimentResult:
    """Wall time of direct and fast forward transforms and the fast/direct deviation."""
    settings = settings or get_settings()
    d, d_s = config.bench_dimension, config.bench_superposition
    if d_s > d:
        raise ConfigurationError(f"bench superposition {d_s} exceeds dimension {d}")
    bandwidths = config.bandwidths or [64, 16, 8][:d_s]
    index_set = GroupedIndexSet.from_orders(build_term_superset(d, d_s), bandwidths, Basis.EXPONENTIAL)
    rng = np.random.default_rng(config.seed)
    threads = _threads(config, settings)
    rows = []
    for M in config.bench_samples:
        nodes = NodeSet(rng.random((M, d)))
        coefficients = rng.standard_normal(index_set.total) + 1j * rng.standard_normal(index_set.total)
        reference = None
        for method in (TransformMethod.DIRECT, TransformMethod.FAST):
            options = plan_options(settings, threads)
            options["method"] = method
            start = time.perf_counter()
            plan = TransformPlan(nodes, index_set, **options)
            values = plan.forward_array(coefficients)
            seconds = time.perf_counter() - start
            if reference is None:
                reference = values
            error = float(np.max(np.abs(values - reference)) / max(np.max(np.abs(reference)), 1e-300))
            rows.append({
                "d": d, "d_s": d_s, "N": "-".join(str(n) for n in bandwidths), "M": M,
                "method": method.value, "seconds": seconds, "max_error": error,
            })
            logger.info("bench M=%d %s: %.3fs, error %.2e", M, method.value, seconds, error)
    table = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    result = ExperimentResult({"bench": table}, {"frequencies": index_set.total})
    if write:
        result.paths.append(write_table(table, config.output_path(settings.output_dir)))
    return result


def run_experiment(config: ExperimentConfig, settings: Optional[Settings] = None) -> ExperimentResult:
    if config.experiment is ExperimentKind.CENSUS:
        return run_census(config, settings=settings)
    if config.experiment is ExperimentKind.TRANSFORM_BENCH:
        return run_transform_bench(config, settings=settings)
    return run_synthetic(config, settings=settings)
