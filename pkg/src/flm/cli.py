"""Command-line pipeline: gen-data, fit, probe, predict, eval, export.

Every subcommand is deterministic given its flags, seed, and input files,
writes its outputs as files, and prints a single JSON summary on stdout.
A JSON config file may supply any flag; explicit command-line values win.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import container
from .errors import (
    DataFormatError,
    FlmError,
    NumericalError,
    ProbeError,
    ResourceCapError,
)
from .estimator import SOLVERS, fit_dataset
from .fields import Dataset, Grid2D, TaskKind
from .library import INDICATOR_AS_PRINTED, PRESETS, LibrarySpec, build_library
from .metrics import report_to_csv_rows, summarize
from .model import (
    PROVENANCE_NN,
    export_model,
    import_model,
    predict_dataset,
    render_equation,
    render_equation_lines,
)
from .probe import ExternalProcess, InProcessAnalytic, ProbePlan, probe
from .synth import (
    DEFAULT_BACKGROUND_K,
    DEFAULT_RANGES,
    DEFAULT_VISCOSITY,
    ParamSplit,
    SamplerSpec,
    gen_darcy_dataset,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_TASK_FLAGS = {
    "scalar": TaskKind.IMAGE_TO_SCALAR,
    "line": TaskKind.IMAGE_TO_LINE,
    "image": TaskKind.IMAGE_TO_IMAGE,
}


def _parse_grid(text: str) -> Grid2D:
    parts = text.lower().split("x")
    if len(parts) == 1:
        n = int(parts[0])
        return Grid2D(n, n)
    if len(parts) == 2:
        return Grid2D(int(parts[0]), int(parts[1]))
    raise DataFormatError(f"cannot parse grid {text!r}; use N or NXxNY")


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _load_library(args) -> tuple[list, str]:
    """Resolve --library (preset name or spec JSON path) into a term list."""
    name = args.library
    indicator = INDICATOR_AS_PRINTED if args.indicator_as_printed else None
    if name in PRESETS:
        spec = PRESETS[name]
        if indicator:
            spec = LibrarySpec(
                task=spec.task, beta_min=spec.beta_min, beta_max=spec.beta_max,
                m_beta=spec.m_beta, families=spec.families, indicator=indicator,
            )
        return build_library(spec), name
    path = Path(name)
    if not path.exists():
        raise DataFormatError(
            f"--library {name!r} is neither a preset ({sorted(PRESETS)}) "
            "nor a spec file"
        )
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid library spec {path}: {exc}") from exc
    if indicator:
        doc["indicator"] = indicator
    return build_library(LibrarySpec.from_json(doc)), str(path)


def cmd_gen_data(args) -> dict:
    task = _TASK_FLAGS[args.task]
    grid = _parse_grid(args.grid)
    if args.ranges:
        ranges = json.loads(args.ranges)
    else:
        ranges = DEFAULT_RANGES[args.family].get(
            args.split, DEFAULT_RANGES[args.family]["train"]
        )
    disjoint_from = None
    if args.split == "ood":
        if args.train_ranges:
            disjoint_from = json.loads(args.train_ranges)
        elif not args.ranges:
            disjoint_from = DEFAULT_RANGES[args.family]["train"]
    split = ParamSplit(
        ranges=ranges, count=args.q, seed=args.seed, tag=args.split,
        disjoint_from=disjoint_from,
    )
    dataset, manifest = gen_darcy_dataset(
        split, task, grid, family=args.family, mu=args.mu,
        background_k=args.background_k, threads=args.threads,
    )
    manifest["provenance"] = "data-driven"
    container.write_fields(args.out, dataset, manifest)
    return {
        "command": "gen-data",
        "out": str(args.out),
        "manifest": str(container.manifest_path(args.out)),
        "q": dataset.q,
        "grid": [grid.nx, grid.ny],
        "task": task.value,
        "split": args.split,
    }


def cmd_fit(args) -> dict:
    dataset = container.read_fields(args.data)
    terms, library_name = _load_library(args)
    provenance = "data-driven"
    manifest = container.read_manifest(args.data)
    if manifest and manifest.get("provenance") == PROVENANCE_NN:
        provenance = PROVENANCE_NN
    model, report = fit_dataset(
        dataset, terms,
        solver=args.solver,
        threshold=args.threshold,
        max_sweeps=args.max_sweeps,
        inner_ridge=args.inner_ridge,
        normalize_columns=not (args.no_col_normalize or args.raw_threshold),
        ridge_lambda=args.ridge_lambda,
        cg_tol=args.cg_tol,
        cg_max_iter=args.cg_max_iter,
        normalize=not args.no_normalize,
        center=args.center,
        provenance=provenance,
        library_name=library_name,
        memory_cap_bytes=args.memory_cap_gib * 2**30,
    )
    export_model(model, args.out)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
        )
    if args.dump_matrix:
        from .assembly import assemble
        from .fields import apply_normalization, fit_normalization

        ds = dataset
        if not args.no_normalize and dataset.norm is None:
            ds = apply_normalization(dataset, fit_normalization(dataset))
        F, _ = assemble(ds, terms)
        container.write_matrix(args.dump_matrix, F.values)
    return {
        "command": "fit",
        "out": str(args.out),
        "library": library_name,
        "solver": args.solver,
        "active_count": report.active_count,
        "train_residual_rms": report.train_residual_rms,
        "cg_iterations": report.cg_iterations,
        "equation": render_equation(model),
    }


def cmd_probe(args) -> dict:
    if bool(args.analytic) == bool(args.endpoint):
        raise DataFormatError("pass exactly one of --analytic or --endpoint")
    sampler = SamplerSpec(args.sampler, json.loads(args.sampler_params))
    if args.analytic:
        # serve the full exported model (normalization included), so probing
        # reproduces its actual predictions
        endpoint = InProcessAnalytic(model=import_model(args.analytic))
        task = endpoint.task
    else:
        endpoint = ExternalProcess(
            argv=tuple(shlex.split(args.endpoint)), timeout=args.timeout
        )
        if not args.task:
            raise DataFormatError("--task is required with --endpoint")
        task = _TASK_FLAGS[args.task]
    if args.task and _TASK_FLAGS[args.task] is not task:
        raise DataFormatError(
            f"--task {args.task} conflicts with the endpoint task {task.value}"
        )
    grid = _parse_grid(args.grid)
    plan = ProbePlan(
        task=task, nx=grid.nx, ny=grid.ny, q=args.q, seed=args.seed,
        sampler=sampler, out_n=args.line_n,
    )
    dataset = probe(endpoint, plan)
    manifest = {
        "provenance": PROVENANCE_NN,
        "task": task.value,
        "seed": args.seed,
        "q": args.q,
        "grid": [grid.nx, grid.ny],
        "sampler": sampler.to_json(),
        "endpoint": args.endpoint or f"analytic:{args.analytic}",
    }
    container.write_fields(args.out, dataset, manifest)
    return {
        "command": "probe",
        "out": str(args.out),
        "q": dataset.q,
        "task": task.value,
    }


def _nearest_resample(inputs: np.ndarray, src: Grid2D, dst: Grid2D) -> np.ndarray:
    """Nearest cell-center resample, used only to keep predictions files
    self-contained when the output resolution differs from the input grid."""
    xi = np.clip((np.floor(dst.x_nodes * src.nx)).astype(int), 0, src.nx - 1)
    yi = np.clip((np.floor(dst.y_nodes * src.ny)).astype(int), 0, src.ny - 1)
    cube = inputs.reshape(-1, src.ny, src.nx)
    return cube[:, yi[:, None], xi[None, :]].reshape(inputs.shape[0], -1)


def cmd_predict(args) -> dict:
    model = import_model(args.model)
    dataset = container.read_fields(args.data)
    out_shape = None
    out_grid = dataset.grid
    if args.resolution:
        if model.task is not TaskKind.IMAGE_TO_IMAGE:
            raise DataFormatError("--resolution only applies to image models")
        out_grid = _parse_grid(args.resolution)
        out_shape = (out_grid.nx, out_grid.ny)
    if args.line_n:
        if model.task is not TaskKind.IMAGE_TO_LINE:
            raise DataFormatError("--line-n only applies to line models")
        out_shape = args.line_n
    preds = predict_dataset(model, dataset, out_shape)
    manifest = {
        "predictions_of": str(args.model),
        "source_data": str(args.data),
        "source_grid": [dataset.grid.nx, dataset.grid.ny],
    }
    if out_shape is not None and model.task is TaskKind.IMAGE_TO_IMAGE:
        inputs = _nearest_resample(dataset.inputs, dataset.grid, out_grid)
        manifest["inputs_resampled"] = True
        out_ds = Dataset(
            task=model.task, grid=out_grid, inputs=inputs, outputs=preds
        )
    else:
        out_ds = Dataset(
            task=model.task, grid=dataset.grid, inputs=dataset.inputs,
            outputs=preds,
        )
    container.write_fields(args.out, out_ds, manifest)
    return {
        "command": "predict",
        "out": str(args.out),
        "q": out_ds.q,
        "out_n": out_ds.out_n,
        "grid": [out_ds.grid.nx, out_ds.grid.ny],
    }


def cmd_eval(args) -> dict:
    truth = container.read_fields(args.truth)
    if bool(args.pred) == bool(args.model):
        raise DataFormatError("pass exactly one of --pred or --model")
    if args.pred:
        pred_ds = container.read_fields(args.pred)
        if pred_ds.outputs.shape != truth.outputs.shape:
            raise DataFormatError(
                f"prediction outputs {pred_ds.outputs.shape} do not match "
                f"truth outputs {truth.outputs.shape}"
            )
        preds = pred_ds.outputs
    else:
        model = import_model(args.model)
        out_shape = truth.out_n if truth.task is TaskKind.IMAGE_TO_LINE else None
        preds = predict_dataset(model, truth, out_shape)
    report = summarize(preds, truth.outputs, args.split)
    doc = report.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["split", "metric", "value"])
            writer.writerows(report_to_csv_rows(report))
    summary = {"command": "eval", "report": doc}
    if args.out:
        summary["out"] = str(args.out)
    return summary


def cmd_export(args) -> dict:
    model = import_model(args.model)
    lines = render_equation_lines(model)
    Path(args.out).write_text("\n".join(lines) + "\n")
    return {
        "command": "export",
        "out": str(args.out),
        "terms": len(model.terms),
        "equation": render_equation(model),
    }


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="RNG seed")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker count; affects speed only, never results")
    sub.add_argument("--config", type=str, default=None,
                     help="JSON file supplying defaults for any flag")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flm",
        description="Interpretable integral-equation surrogates: data "
        "generation, sparse fitting, black-box probing, prediction, "
        "evaluation, and export.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    g = subs.add_parser("gen-data", help="generate a flow-oracle dataset")
    g.add_argument("--family", choices=("case2", "case3", "constant"),
                   default="case3")
    g.add_argument("--task", choices=sorted(_TASK_FLAGS), required=True)
    g.add_argument("--split", choices=("train", "validation", "ood"),
                   default="train")
    g.add_argument("--q", type=int, required=True, help="sample count")
    g.add_argument("--grid", type=str, default="28",
                   help="input grid: N or NXxNY")
    g.add_argument("--ranges", type=str, default=None,
                   help="JSON parameter ranges, e.g. '{\"A\":[0,1]}'")
    g.add_argument("--train-ranges", type=str, default=None,
                   help="JSON training ranges an OOD split must avoid")
    g.add_argument("--mu", type=float, default=DEFAULT_VISCOSITY)
    g.add_argument("--background-k", type=float, default=DEFAULT_BACKGROUND_K)
    g.add_argument("--out", type=str, required=True)
    _add_common(g)
    g.set_defaults(func=cmd_gen_data)

    f = subs.add_parser("fit", help="fit a sparse surrogate to a dataset")
    f.add_argument("--data", type=str, required=True)
    f.add_argument("--library", type=str, required=True,
                   help="preset name or library-spec JSON path")
    f.add_argument("--solver", choices=SOLVERS, default="stlsq")
    f.add_argument("--lambda", dest="threshold", type=float, default=0.1,
                   help="stlsq threshold")
    f.add_argument("--max-sweeps", type=int, default=20)
    f.add_argument("--inner-ridge", type=float, default=0.0)
    f.add_argument("--ridge-lambda", type=float, default=1e-9)
    f.add_argument("--cg-tol", type=float, default=1e-10)
    f.add_argument("--cg-max-iter", type=int, default=None)
    f.add_argument("--no-col-normalize", action="store_true",
                   help="solve and threshold on raw columns")
    f.add_argument("--raw-threshold", action="store_true",
                   help="alias of --no-col-normalize")
    f.add_argument("--no-normalize", action="store_true",
                   help="skip min-max data normalization")
    f.add_argument("--center", action="store_true",
                   help="mean-center features and targets during the solve")
    f.add_argument("--indicator-as-printed", action="store_true",
                   help="integrate where 2D/beta > 1 instead of the local window")
    f.add_argument("--memory-cap-gib", type=float, default=8.0)
    f.add_argument("--dump-matrix", type=str, default=None,
                   help="debug dump of the design matrix")
    f.add_argument("--report", type=str, default=None,
                   help="write the fit report JSON here")
    f.add_argument("--out", type=str, required=True)
    _add_common(f)
    f.set_defaults(func=cmd_fit)

    p = subs.add_parser("probe", help="query a predictor to build a dataset")
    p.add_argument("--analytic", type=str, default=None,
                   help="model JSON served by the in-process predictor")
    p.add_argument("--endpoint", type=str, default=None,
                   help="command line of an external probe-protocol server")
    p.add_argument("--task", choices=sorted(_TASK_FLAGS), default=None)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--grid", type=str, default="28")
    p.add_argument("--sampler", choices=("smooth", "case2", "case3", "constant"),
                   default="smooth")
    p.add_argument("--sampler-params", type=str, default="{}")
    p.add_argument("--line-n", type=int, default=None)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--out", type=str, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_probe)

    r = subs.add_parser("predict", help="evaluate a model on a dataset")
    r.add_argument("--model", type=str, required=True)
    r.add_argument("--data", type=str, required=True)
    r.add_argument("--resolution", type=str, default=None,
                   help="image output grid, e.g. 56x56")
    r.add_argument("--line-n", type=int, default=None)
    r.add_argument("--out", type=str, required=True)
    _add_common(r)
    r.set_defaults(func=cmd_predict)

    e = subs.add_parser("eval", help="error report against a truth dataset")
    e.add_argument("--pred", type=str, default=None,
                   help="predictions dataset (from `predict`)")
    e.add_argument("--model", type=str, default=None,
                   help="recompute predictions from this model instead")
    e.add_argument("--truth", type=str, required=True)
    e.add_argument("--split", choices=("train", "validation", "ood"),
                   default="train")
    e.add_argument("--out", type=str, default=None)
    e.add_argument("--csv", type=str, default=None)
    _add_common(e)
    e.set_defaults(func=cmd_eval)

    x = subs.add_parser("export", help="write the rendered equation text")
    x.add_argument("--model", type=str, required=True)
    x.add_argument("--out", type=str, required=True)
    _add_common(x)
    x.set_defaults(func=cmd_export)

    return parser


def _merge_config(argv: list[str]) -> list[str]:
    """Expand --config JSON entries into flag tokens placed before the
    explicit flags, so the command line takes precedence (last flag wins)."""
    config_path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif token.startswith("--config="):
            config_path = token.split("=", 1)[1]
    if not config_path or not argv:
        return argv
    try:
        doc = json.loads(Path(config_path).read_text())
    except OSError as exc:
        raise DataFormatError(f"cannot read config {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid config {config_path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataFormatError("config must be a JSON object")
    tokens: list[str] = []
    for key, value in sorted(doc.items()):
        flag = "--" + str(key).replace("_", "-")
        if flag == "--config" or value is None:
            continue
        if isinstance(value, bool):
            if value:
                tokens.append(flag)
        else:
            tokens.extend([flag, str(value)])
    return [argv[0], *tokens, *argv[1:]]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        argv = list(sys.argv[1:] if argv is None else argv)
        args = parser.parse_args(_merge_config(argv))
        summary = args.func(args)
    except (DataFormatError, ProbeError, ResourceCapError, FileNotFoundError,
            IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FlmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _emit(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
