"""Command-line driver for the staged workflow.

Each subcommand reads the artifacts of the previous one from the output
directory, so the pipeline can be resumed or inspected between steps::

    stackppc synth   --config dgp.json --seed 1 --out data/
    stackppc fit     --config run.json
    stackppc stack   --config run.json --objective lsq
    stackppc ppc     --config run.json
    stackppc compare --config run.json
    stackppc report  --config run.json      # all of the above + index.html
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from html import escape

import jsonschema
import numpy as np

from . import kernels
from .artifacts import ArtifactError, ArtifactWriter, load_schema
from .comparisons import build_profiles, contrast_gaps, focal_grid, predict_cells
from .dataset import DataError, dataset_to_csv, generate_synthetic, load_csv, quartile_bin, schema_of
from .design import build_design
from .diagnostics import diagnose
from .loo import loglik_matrix, loo_expectation, psis_loo
from .model import ModelEnsemble, ModelSpec, PriorConfig
from .ppc import PpcReport, holdout_check, run_ppc
from .sampler import PosteriorDraws, SamplerConfig, sample
from .stacking import (LpdMatrix, brier, log_score, stack_draws, stack_weights_logscore,
                       stack_weights_lsq, stacked_predictive)
from .svg import histogram_svg, interval_svg

log = logging.getLogger("stackppc")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_DIAGNOSTICS = 0, 1, 2, 3
RHAT_MAX = 1.05

# subsystem tags for seed derivation
_FIT, _PPC, _HOLDOUT = 1, 2, 3


class ConfigError(ValueError):
    pass


class DiagnosticsFailure(RuntimeError):
    pass


def derive_seed(root: int, *path: int) -> int:
    """Independent 63-bit seed for a subsystem, stable across runs."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _qtag(q: float) -> str:
    return "q" + format(round(q * 100, 6), "g").replace(".", "_")


# --------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class RunConfig:
    path: str
    data: str
    schema: object  # path or inline mapping
    derived: tuple
    core: ModelSpec
    candidates: tuple[ModelSpec, ...]
    sampler: dict
    objective: str
    groupings: tuple[tuple[str, ...], ...]
    holdout: str | None
    statistic: str
    ppc_sources: tuple[str, ...]
    focal: tuple[str, ...]
    quantiles: tuple[float, ...]
    contrast: dict | None
    out: str
    seed: int

    @property
    def ensemble(self) -> ModelEnsemble:
        return ModelEnsemble(self.core, self.candidates)


def _model_from_entry(entry, base: str, where: str) -> ModelSpec:
    if isinstance(entry, str):
        path = os.path.join(base, entry)
        try:
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"{where}: model file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{where}: {path} is not valid JSON: {exc}") from None
        where = path
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: model must be a file path or an object")
    try:
        if "formula" in entry:
            if "name" not in entry:
                raise KeyError("name")
            spec = ModelSpec.from_formula(entry["formula"], entry["name"],
                                          PriorConfig(**entry.get("prior", {})))
        else:
            spec = ModelSpec.from_dict(entry)
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if _safe(spec.name) != spec.name:
        raise ConfigError(f"{where}: model name {spec.name!r} may only use letters, digits, '_', '.', '-'")
    return spec


def load_config(path, seed=None, objective=None, threads=None, out=None) -> RunConfig:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    try:
        jsonschema.validate(raw, load_schema("runconfig"))
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path)
        if exc.validator == "required":
            missing = [f for f in exc.validator_value if f not in exc.instance]
            field = ".".join(filter(None, [where, missing[0] if missing else ""]))
            raise ConfigError(f"{path}: missing field {field!r}") from None
        raise ConfigError(f"{path}: field {where or '<root>'!r}: {exc.message}") from None

    base = os.path.dirname(os.path.abspath(path))
    core = _model_from_entry(raw["core"], base, f"{path}: core")
    cands = tuple(_model_from_entry(c, base, f"{path}: candidates[{j}]")
                  for j, c in enumerate(raw["candidates"]))
    try:
        ModelEnsemble(core, cands)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    sampler = dict(raw.get("sampler", {}))
    if threads is not None:
        sampler["threads"] = threads
    try:
        SamplerConfig(**sampler)
    except TypeError as exc:
        raise ConfigError(f"{path}: sampler: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: sampler: {exc}") from None

    ppc = raw.get("ppc", {})
    groupings = tuple(tuple(g) for g in ppc.get("groupings", []))
    for j, g in enumerate(groupings):
        if not g:
            raise ConfigError(f"{path}: ppc.groupings[{j}] is empty; list at least one column")
    comp = raw.get("compare", {})
    schema = raw["schema"]
    return RunConfig(
        path=path,
        data=os.path.join(base, raw["data"]),
        schema=os.path.join(base, schema) if isinstance(schema, str) else schema,
        derived=tuple(raw.get("derived", [])),
        core=core,
        candidates=cands,
        sampler=sampler,
        objective=objective or raw.get("objective", "logscore"),
        groupings=groupings,
        holdout=ppc.get("holdout"),
        statistic=ppc.get("statistic", "mean"),
        ppc_sources=tuple(ppc.get("sources", ["stack"])),
        focal=tuple(comp.get("focal", [])),
        quantiles=tuple(comp.get("quantiles", [0.25, 0.5, 0.75])),
        contrast=comp.get("contrast"),
        out=out or os.path.join(base, raw.get("out", "out")),
        seed=int(seed if seed is not None else raw.get("seed", 0)),
    )


def load_data(cfg: RunConfig):
    try:
        data = load_csv(cfg.data, cfg.schema)
        for d in cfg.derived:
            data = quartile_bin(data, d["quartile_of"], d.get("name"), d.get("role"))
    except DataError as exc:
        raise ConfigError(f"{cfg.data}: {exc}") from None
    return data


# --------------------------------------------------------------------------
# fit


def _fit_one(cfg: RunConfig, k: int, spec: ModelSpec, data, w: ArtifactWriter):
    design = build_design(spec, data)
    sc = SamplerConfig(**{**cfg.sampler, "seed": derive_seed(cfg.seed, _FIT, k)})
    draws = sample(design, spec.prior, sc)
    diag = diagnose(draws) if draws.n_chains >= 2 else None
    worst = diag.worst() if diag is not None else (None, None)
    converged = worst[1] is None or worst[1] <= RHAT_MAX
    rows = ([int(c), int(i), *b] for c, i, b in zip(draws.chain, draws.iteration, draws.draws.tolist()))
    w.csv(f"fit/{spec.name}/draws.csv", ["chain", "iteration", *design.labels], rows, "draws_csv")
    w.json(f"fit/{spec.name}/fit.json", {
        "model": spec.to_dict(),
        "sampler": sc.to_dict(),
        "labels": list(design.labels),
        "n_draws": draws.n_draws,
        "step_size": draws.step_size,
        "inv_metric": draws.inv_metric,
        "divergences": draws.divergences,
        "saturated": draws.saturated,
        "diagnostics": diag.to_dict() if diag is not None else None,
        "rhat_max": RHAT_MAX,
        "converged": converged,
        "worst": {"parameter": worst[0], "rhat": worst[1]},
        "design_warnings": list(design.warnings),
    }, "fit")
    if not converged:
        return f"model {spec.name!r}: R-hat {worst[1]:.3f} > {RHAT_MAX} for parameter {worst[0]!r}"
    return None


def cmd_fit(cfg: RunConfig, w: ArtifactWriter) -> None:
    data = load_data(cfg)
    failures = []
    for k, spec in enumerate(cfg.ensemble.models):
        log.info("fitting %s", spec.name)
        msg = _fit_one(cfg, k, spec, data, w)
        if msg:
            failures.append(msg)
    w.validate()
    if failures:
        raise DiagnosticsFailure("; ".join(failures))


def _load_draws(cfg: RunConfig, spec: ModelSpec, design) -> PosteriorDraws:
    base = os.path.join(cfg.out, "fit", spec.name)
    try:
        with open(os.path.join(base, "fit.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        with open(os.path.join(base, "draws.csv"), encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(",")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except FileNotFoundError as exc:
        raise ArtifactError(f"missing draw store for model {spec.name!r} ({exc.filename}); "
                            "run 'fit' first") from None
    labels = [lab.strip('"') for lab in header[2:]]
    if labels != list(design.labels) or meta["model"] != spec.to_dict():
        raise ArtifactError(f"draw store for model {spec.name!r} does not match the config; rerun 'fit'")
    if not meta["converged"]:
        worst = meta["worst"]
        raise DiagnosticsFailure(f"model {spec.name!r}: R-hat {worst['rhat']:.3f} > {RHAT_MAX} "
                                 f"for parameter {worst['parameter']!r}")
    chain = table[:, 0].astype(np.int64)
    return PosteriorDraws(
        draws=np.ascontiguousarray(table[:, 2:]), chain=chain, iteration=table[:, 1].astype(np.int64),
        labels=tuple(labels), step_size=np.asarray(meta["step_size"], dtype=float),
        inv_metric=np.asarray(meta["inv_metric"], dtype=float), divergences=meta["divergences"],
        saturated=meta["saturated"], accept_stat=np.empty(0), n_leapfrog=np.empty(0),
        seed=meta["sampler"]["seed"], config=SamplerConfig(**meta["sampler"]))


class _Fitted:
    """Data, designs and draws for every model, read back from the fit stage."""

    def __init__(self, cfg: RunConfig):
        self.data = load_data(cfg)
        self.specs = cfg.ensemble.models
        self.designs = [build_design(s, self.data) for s in self.specs]
        self.draws = [_load_draws(cfg, s, d) for s, d in zip(self.specs, self.designs)]
        self.names = [s.name for s in self.specs]

    @property
    def candidates(self):
        return self.specs[1:], self.designs[1:], self.draws[1:]


# --------------------------------------------------------------------------
# stack


def cmd_stack(cfg: RunConfig, w: ArtifactWriter) -> None:
    fitted = _Fitted(cfg)
    y = fitted.data.y
    loos, liks = [], []
    for spec, design, draws in zip(fitted.specs, fitted.designs, fitted.draws):
        L = loglik_matrix(draws, design)
        res = psis_loo(L)
        liks.append(L)
        loos.append(res)
        w.csv(f"stack/loo_{spec.name}.csv", ["observation", "elpd", "khat"],
              ((i, e, k) for i, (e, k) in enumerate(zip(res.pointwise.tolist(), res.khat.tolist()))),
              "loo_csv")
    w.json("stack/loo.json", {"models": [
        {"model": name, "method": r.method, "elpd": r.elpd, "mean_elpd": r.elpd / r.pointwise.size,
         "max_khat": float(np.max(r.khat)), "flagged": r.flagged}
        for name, r in zip(fitted.names, loos)]}, "loo")

    cand_names = fitted.names[1:]
    _, cand_designs, cand_draws = fitted.candidates
    lpd = LpdMatrix.from_loo(loos[1:], cand_names)
    if cfg.objective == "logscore":
        sw = stack_weights_logscore(lpd)
    else:
        F = np.column_stack([
            loo_expectation(L, kernels.sigmoid(d.draws @ np.asarray(x.X).T))
            for L, d, x in zip(liks[1:], cand_draws, cand_designs)])
        sw = stack_weights_lsq(F, y, cand_names)
    weights = np.asarray(sw.weights)

    def mean_prob(draws, design):
        return kernels.sigmoid(draws.draws @ np.asarray(design.X).T).mean(axis=0)

    rows = [{"model": fitted.names[0], "role": "core", "weight": None,
             "brier": brier(mean_prob(fitted.draws[0], fitted.designs[0]), y),
             "loo_log_score": loos[0].elpd / fitted.data.n}]
    for k, name in enumerate(cand_names):
        rows.append({"model": name, "role": "candidate", "weight": float(weights[k]),
                     "brier": brier(mean_prob(cand_draws[k], cand_designs[k]), y),
                     "loo_log_score": loos[k + 1].elpd / fitted.data.n})
    _, p_stack = stacked_predictive(weights, cand_draws, cand_designs, cand_names)
    rows.append({"model": "ensemble", "role": "ensemble", "weight": None,
                 "brier": brier(p_stack, y), "loo_log_score": log_score(weights, lpd.log_values)})
    w.json("stack/weights.json", {"objective": cfg.objective, "objective_tag": sw.tag,
                                  "objective_value": sw.objective, "brier_orientation": "positive",
                                  "rows": rows}, "weights")
    keys = ["model", "role", "weight", "brier", "loo_log_score"]
    w.csv("stack/weights.csv", keys + ["objective"],
          ([r[k] for k in keys] + [cfg.objective] for r in rows), "weights_csv")
    w.validate()


def _load_stack(cfg: RunConfig, fitted: _Fitted):
    path = os.path.join(cfg.out, "stack", "weights.json")
    try:
        with open(path, encoding="utf-8") as fh:
            table = json.load(fh)
    except FileNotFoundError:
        raise ArtifactError(f"missing stacking weights ({path}); run 'stack' first") from None
    cand = {r["model"]: r["weight"] for r in table["rows"] if r["role"] == "candidate"}
    names = fitted.names[1:]
    if sorted(cand) != sorted(names):
        raise ArtifactError("stacking weights do not match the configured candidates; rerun 'stack'")
    _, designs, draws = fitted.candidates
    return stack_draws(np.array([cand[n] for n in names]), draws, names), designs


# --------------------------------------------------------------------------
# ppc


def _group_slug(label: str) -> str:
    return _safe(label.replace("=", "-").replace(", ", "_"))


def _write_ppc(w: ArtifactWriter, rel: str, report: PpcReport) -> dict:
    w.json(f"{rel}.json", report.to_dict(), "ppc")
    for g in report.groups:
        label = g.label(report.grouping)
        w.text(f"{rel}/{_group_slug(label)}.svg",
               histogram_svg(g.edges, g.counts, g.observed, title=f"{report.source}: {label}",
                             x_label=f"{report.statistic} of replicated outcome"))
    return {"source": report.source, "grouping": list(report.grouping), "file": f"{rel}.json",
            "n_groups": len(report.groups), "min_tspppv": report.min_tspppv()}


def cmd_ppc(cfg: RunConfig, w: ArtifactWriter) -> None:
    if not cfg.groupings and cfg.holdout is None:
        raise ConfigError(f"{cfg.path}: ppc needs a non-empty 'ppc.groupings' list or 'ppc.holdout'")
    fitted = _Fitted(cfg)
    data = fitted.data
    for g in cfg.groupings:
        unknown = [c for c in g if c not in data.columns]
        if unknown:
            raise ConfigError(f"{cfg.path}: ppc.groupings: unknown column(s) {unknown}")
    stacked, cand_designs = _load_stack(cfg, fitted)
    sources = {name: (d, x) for name, d, x in zip(fitted.names, fitted.draws, fitted.designs)}
    sources["stack"] = (stacked, cand_designs)
    for s in cfg.ppc_sources:
        if s not in sources:
            raise ConfigError(f"{cfg.path}: ppc.sources: unknown source {s!r}")
    index = []
    for j, g in enumerate(cfg.groupings):
        for m, src in enumerate(cfg.ppc_sources):
            draws, X = sources[src]
            rep = run_ppc(draws, X, data, g, derive_seed(cfg.seed, _PPC, j, m), src, cfg.statistic)
            index.append(_write_ppc(w, f"ppc/{src}/{'x'.join(g)}", rep))
    if cfg.holdout is not None:
        if cfg.holdout not in data.columns:
            raise ConfigError(f"{cfg.path}: ppc.holdout: unknown column {cfg.holdout!r}")
        reports = holdout_check(sources, data, cfg.holdout, fitted.specs,
                                derive_seed(cfg.seed, _HOLDOUT), cfg.statistic)
        for name, rep in reports.items():
            index.append(_write_ppc(w, f"ppc/holdout/{name}", rep))
    w.json("ppc/summary.json", {"statistic": cfg.statistic, "holdout": cfg.holdout,
                                "reports": index}, "ppc_summary")
    w.validate()


# --------------------------------------------------------------------------
# compare


def cmd_compare(cfg: RunConfig, w: ArtifactWriter) -> None:
    if not cfg.focal:
        raise ConfigError(f"{cfg.path}: missing field 'compare.focal'")
    fitted = _Fitted(cfg)
    data = fitted.data
    unknown = [f for f in cfg.focal if f not in data.columns]
    if unknown:
        raise ConfigError(f"{cfg.path}: compare.focal: unknown column(s) {unknown}")
    stacked, _ = _load_stack(cfg, fitted)
    cand_specs = fitted.specs[1:]
    focal = list(cfg.focal)
    nonfocal = sorted(set().union(*(s.variables for s in cand_specs)) - set(focal))
    grid = focal_grid(data, focal)
    profiles = build_profiles(data, nonfocal, cfg.quantiles)
    cells = predict_cells(stacked, cand_specs, data, grid, profiles)

    def source_median(cell):
        # median of the binned source variable, where a focal column is a quartile bin
        for f, lev in zip(focal, cell):
            b = data.binnings.get(f)
            if b is not None:
                return b.level_medians[int(lev) - 1]
        return None

    w.csv("compare/focal_grid.csv", focal + ["n", "fraction"],
          (list(c) + [s, fr] for c, s, fr in grid.rows()), "focal_grid_csv")
    w.csv("compare/cells.csv", focal + ["profile", "source_median", "median", "q05", "q95"],
          (list(c.cell) + [_qtag(c.tag), source_median(c.cell), c.median, c.q05, c.q95] for c in cells),
          "cells_csv")
    files = ["compare/focal_grid.csv", "compare/cells.csv"]

    contrast = cfg.contrast
    if contrast is not None:
        col, ref, cmp_ = contrast["column"], str(contrast["reference"]), str(contrast["comparison"])
        convention = contrast.get("convention", "interpretation")
        if col not in focal:
            raise ConfigError(f"{cfg.path}: compare.contrast.column {col!r} is not a focal column")
        a, b = (ref, cmp_) if convention == "interpretation" else (cmp_, ref)
        definition = f"P({col}={a}) - P({col}={b})"
        for q in cfg.quantiles:
            gaps = contrast_gaps(cells, focal, col, ref, cmp_, float(q), convention)
            rel = f"compare/gaps_{_qtag(q)}.csv"
            w.csv(rel, ["cell", "profile", "definition", "convention", "median", "q05", "q95"],
                  ([g.label, _qtag(q), definition, convention, g.median, g.q05, g.q95] for g in gaps),
                  "gaps_csv")
            files.append(rel)

    if len(focal) <= 2:
        _cells_svg(w, data, focal, grid, cells, cfg, contrast)
        files.append("compare/cells.svg")
    w.json("compare/compare.json", {
        "focal": focal, "nonfocal": nonfocal,
        "profiles": [{"tag": _qtag(p.tag), "quantile": p.tag, "values": p.values} for p in profiles],
        "contrast": contrast, "n_slots": stacked.n_slots, "files": files}, "compare")
    w.validate()


def _cells_svg(w, data, focal, grid, cells, cfg, contrast):
    series_col = contrast["column"] if contrast else (focal[1] if len(focal) == 2 else None)
    x_col = next((f for f in focal if f != series_col), focal[0])
    xi = focal.index(x_col)
    x_levels = list(dict.fromkeys(c[xi] for c in grid.cells))
    b = data.binnings.get(x_col)
    xs = list(b.level_medians) if b is not None else list(range(1, len(x_levels) + 1))
    labels = [format(v, ".3g") for v in xs] if b is not None else x_levels
    index = {(c.cell, c.tag): c for c in cells}
    series = []
    s_levels = [None] if series_col is None or series_col == x_col else \
        list(dict.fromkeys(c[focal.index(series_col)] for c in grid.cells))
    for q in cfg.quantiles:
        for lev in s_levels:
            pts = []
            for xl in x_levels:
                cell = [None] * len(focal)
                cell[xi] = xl
                if lev is not None:
                    cell[focal.index(series_col)] = lev
                c = index[(tuple(cell), float(q))]
                pts.append((c.median, c.q05, c.q95))
            name = _qtag(q) + ("" if lev is None else f" {series_col}={lev}")
            series.append((name, pts))
    x_label = f"median of {b.source} within {x_col}" if b is not None else x_col
    w.text("compare/cells.svg", interval_svg(series, xs, labels, title="Predicted probability by cell",
                                             x_label=x_label))


# --------------------------------------------------------------------------
# report and synth


def _write_index(w: ArtifactWriter) -> None:
    svgs = sorted(rel for rel, _ in w.written if rel.endswith(".svg"))
    items = "\n".join(f'<li><a href="{escape(r)}">{escape(r)}</a><br/>'
                      f'<img src="{escape(r)}" alt="{escape(r)}"/></li>' for r in svgs)
    w.text("index.html", "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"/>"
           "<title>stackppc report</title></head><body>\n"
           f"<h1>stackppc report</h1>\n<ul>\n{items}\n</ul>\n</body></html>\n")


def cmd_report(cfg: RunConfig, w: ArtifactWriter) -> None:
    cmd_fit(cfg, w)
    cmd_stack(cfg, w)
    if cfg.groupings or cfg.holdout is not None:
        cmd_ppc(cfg, w)
    if cfg.focal:
        cmd_compare(cfg, w)
    _write_index(w)
    files = []
    for rel in sorted({rel for rel, _ in w.written}):
        with open(w.path(rel), "rb") as fh:
            blob = fh.read()
        files.append({"path": rel, "bytes": len(blob), "sha256": hashlib.sha256(blob).hexdigest()})
    w.json("manifest.json", {"seed": cfg.seed, "objective": cfg.objective, "files": files}, "manifest")
    w.validate()


def cmd_synth(dgp_path: str, seed: int, out: str) -> None:
    try:
        with open(dgp_path, encoding="utf-8") as fh:
            dgp = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"DGP file not found: {dgp_path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{dgp_path}: not valid JSON: {exc}") from None
    try:
        data = generate_synthetic(dgp, seed)
    except KeyError as exc:
        raise ConfigError(f"{dgp_path}: missing field {exc.args[0]!r}") from None
    except DataError as exc:
        raise ConfigError(f"{dgp_path}: {exc}") from None
    w = ArtifactWriter(out)
    w.csv_text("data.csv", dataset_to_csv(data), "dataset_csv")
    w.json("schema.json", schema_of(data), "data_schema")
    w.json("truth.json", {"seed": seed, "n": data.n, "truth": dict(data.truth)}, "truth")
    w.validate()
    print(w.path("data.csv"))


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stackppc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "sample every model and write draw stores with diagnostics",
        "stack": "PSIS-LOO, stacking weights and the Brier table",
        "ppc": "grouped and hold-out posterior predictive checks",
        "compare": "focal-grid predictions and gap posteriors",
        "report": "run every step and write an HTML index",
        "synth": "simulate a dataset from a DGP description",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True,
                       help="DGP JSON for synth, run configuration JSON otherwise")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("-v", "--verbose", action="store_true")
        if name != "synth":
            p.add_argument("--objective", choices=("logscore", "lsq"), default=None)
            p.add_argument("--threads", type=int, default=None)
    return parser


COMMANDS = {"fit": cmd_fit, "stack": cmd_stack, "ppc": cmd_ppc, "compare": cmd_compare,
            "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.command == "synth":
            cmd_synth(args.config, args.seed or 0, args.out or ".")
            return EXIT_OK
        cfg = load_config(args.config, args.seed, args.objective, args.threads, args.out)
        COMMANDS[args.command](cfg, ArtifactWriter(cfg.out))
        return EXIT_OK
    except ConfigError as exc:
        print(f"stackppc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DiagnosticsFailure as exc:
        print(f"stackppc: diagnostics failure: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("traceback", exc_info=True)
        print(f"stackppc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
