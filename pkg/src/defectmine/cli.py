"""Command-line pipeline: ingest, link, validate, label, induce, assign,
emit, evaluate, experiment, and the validation service.

All state lives in the pipeline directory (``--out``): the graph cache, the
normalized issue export, candidate tables, the decision log, label and
inducing tables, and the per-release datasets. Primary outputs are
deterministic for identical inputs; wall-clock metadata goes to the
``run-meta.json`` sidecar only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional

from defectmine import issues as issues_mod
from defectmine import links as links_mod
from defectmine.fixlabel import JL, JLM, JLMIV, SZZ, FixLabel, label_jl_family, label_szz
from defectmine.inducing import (
    FilterConfig,
    IND_JL_R,
    IND_JLMIV,
    IND_JLMIV_R,
    IND_JLMIV_RAV,
    IND_SZZ,
    JAVA_PROFILE,
    LanguageProfile,
    find_inducing_all,
    logical_lines,
    read_refactoring_report,
)
from defectmine.predict import (
    PredictError,
    ReleaseDataset,
    churn_features,
    run_experiment,
)
from defectmine.releases import (
    Release,
    assign_6m,
    assign_av,
    assign_ind,
    emit_dataset,
    production_files,
    read_release_table,
)
from defectmine.stats import aggregate_agreement, friedman_nemenyi, write_stats_report
from defectmine.validation import ValidationStore, build_queue
from defectmine.vcs import ingest_repository, load_graph, save_graph

log = logging.getLogger("defectmine.cli")

FIX_STRATEGIES = {"szz": SZZ, "jl": JL, "jlm": JLM, "jlmiv": JLMIV}
INDUCING_STRATEGIES = {
    "szz": IND_SZZ,
    "jlmiv": IND_JLMIV,
    "jlmiv-r": IND_JLMIV_R,
    "jlmiv-rav": IND_JLMIV_RAV,
    "jl-r": IND_JL_R,
}
ASSIGN_STRATEGIES = ("6m", "av", "ind")


class CliError(Exception):
    pass


# -- pipeline state ------------------------------------------------------------


class Pipeline:
    """Artifact paths and loaders for one pipeline directory."""

    def __init__(self, out: Path):
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        self.graph_path = out / "graph.jsonl"
        self.issues_path = out / "issues.jsonl"
        self.candidates_path = out / "candidates.jsonl"
        self.decisions_path = out / "decisions.jsonl"
        self.datasets_dir = out / "datasets"
        self.reports_dir = out / "reports"

    def require(self, path: Path, producer: str) -> Path:
        if not path.exists():
            raise CliError(f"{path.name} missing; run `{producer}` first")
        return path

    def load_graph(self):
        return load_graph(self.require(self.graph_path, "ingest-vcs"))

    def load_issues(self, project: Optional[str] = None):
        return issues_mod.read_export(self.require(self.issues_path, "ingest-issues"), project)

    def load_candidates(self) -> list[links_mod.LinkCandidate]:
        path = self.require(self.candidates_path, "detect-links")
        out = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            checks = links_mod.SemanticCheckResult(**rec.pop("checks"))
            out.append(links_mod.LinkCandidate(checks=checks, **rec))
        return out

    def save_candidates(self, candidates: list[links_mod.LinkCandidate]) -> None:
        rows = []
        for c in sorted(candidates, key=lambda c: (c.commit, c.issue, c.detector)):
            rows.append(
                json.dumps(
                    {
                        "commit": c.commit,
                        "issue": c.issue,
                        "detector": c.detector,
                        "matched_text": c.matched_text,
                        "at_message_start": c.at_message_start,
                        "validation": c.validation,
                        "checks": {
                            "fixed_once": c.checks.fixed_once,
                            "assignee_matches": c.checks.assignee_matches,
                            "text_contained": c.checks.text_contained,
                            "files_attached": c.checks.files_attached,
                            "keyword_present": c.checks.keyword_present,
                            "bare_number_syntax": c.checks.bare_number_syntax,
                        },
                    },
                    sort_keys=True,
                )
            )
        self.candidates_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    def load_store(self) -> ValidationStore:
        if self.decisions_path.exists():
            return ValidationStore.load(self.decisions_path)
        return ValidationStore(log_path=self.decisions_path)

    def candidates_with_decisions(self) -> list[links_mod.LinkCandidate]:
        store = self.load_store()
        return store.apply_to_candidates(self.load_candidates())

    def labels_path(self, strategy: str) -> Path:
        return self.out / f"labels-{strategy.lower()}.tsv"

    def load_labels(self, strategy: str) -> set[FixLabel]:
        path = self.require(self.labels_path(strategy), "labels")
        by_commit: dict[str, set[str]] = {}
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            if not line.strip():
                continue
            commit, issue, _strategy = line.split("\t")
            by_commit.setdefault(commit, set()).add(issue)
        return {
            FixLabel(commit=c, strategy=strategy, fixing_for=frozenset(keys))
            for c, keys in by_commit.items()
        }

    def save_labels(self, strategy: str, labels: set[FixLabel]) -> None:
        rows = ["commit\tissue\tstrategy"]
        for label in sorted(labels, key=lambda l: l.commit):
            for issue in sorted(label.fixing_for):
                rows.append(f"{label.commit}\t{issue}\t{strategy}")
        self.labels_path(strategy).write_text("\n".join(rows) + "\n", encoding="utf-8")

    def inducing_path(self, strategy: str) -> Path:
        return self.out / f"inducing-{strategy.lower()}.tsv"

    def write_meta(self, command: str, started: float) -> None:
        meta = {"command": command, "elapsed_s": round(time.time() - started, 3),
                "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
        (self.out / "run-meta.json").write_text(json.dumps(meta) + "\n", encoding="utf-8")


def _filter_config(args) -> FilterConfig:
    profile = JAVA_PROFILE
    patterns = None
    if getattr(args, "filter_config", None):
        raw = json.loads(Path(args.filter_config).read_text(encoding="utf-8"))
        profile = LanguageProfile(
            line_comment=raw.get("line_comment", "//"),
            block_comment_start=raw.get("block_comment_start", "/*"),
            block_comment_end=raw.get("block_comment_end", "*/"),
            string_delimiters=tuple(raw.get("string_delimiters", ['"', "'"])),
            source_extensions=tuple(raw.get("source_extensions", [".java"])),
        )
        patterns = raw.get("nonproduction")
    refactorings = ()
    if getattr(args, "refactorings", None):
        refactorings = read_refactoring_report(args.refactorings)
    kwargs = {"refactorings": refactorings, "profile": profile}
    if patterns is not None:
        kwargs["nonproduction_path_patterns"] = tuple(patterns)
    return FilterConfig(**kwargs)


# -- subcommands ---------------------------------------------------------------


def cmd_ingest_vcs(args) -> int:
    pipe = Pipeline(Path(args.out))
    graph = ingest_repository(args.repo, args.heads or None)
    save_graph(graph, pipe.graph_path)
    print(f"ingested {len(graph)} commits -> {pipe.graph_path}")
    return 0


def cmd_ingest_issues(args) -> int:
    out = Path(args.out)
    source = args.url if args.url else args.from_file
    if not source:
        raise CliError("one of --from/--url is required")
    issues = issues_mod.ingest_issues(source, args.project)
    out.parent.mkdir(parents=True, exist_ok=True)
    issues_mod.write_export(issues, out)
    print(f"ingested {len(issues)} issues of {args.project} -> {out}")
    return 0


def cmd_detect_links(args) -> int:
    pipe = Pipeline(Path(args.out))
    graph = pipe.load_graph()
    issues = pipe.load_issues(args.project)
    misspellings = (
        links_mod.read_misspellings(args.misspellings) if args.misspellings else {}
    )
    candidates: list[links_mod.LinkCandidate] = []
    wanted = args.strategy
    if wanted in ("szz", "both"):
        candidates += links_mod.detect_szz_links(graph, issues)
    if wanted in ("jl", "both"):
        candidates += links_mod.detect_jl_links(graph, issues, misspellings)
    candidates = links_mod.auto_validate(candidates)
    pipe.save_candidates(candidates)
    auto = sum(1 for c in candidates if c.validation == links_mod.AUTO_VALIDATED)
    print(f"{len(candidates)} candidates ({auto} auto-validated) -> {pipe.candidates_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from defectmine.service import ValidationService, create_app

    pipe = Pipeline(Path(args.out))
    graph = pipe.load_graph()
    issues = {i.key: i for i in pipe.load_issues(args.project)}
    candidates = pipe.load_candidates()
    store = pipe.load_store()
    service = ValidationService(store, graph, issues, candidates, token=args.token)
    app = create_app(service, allow_reset=args.allow_reset)
    print(f"serving validation API on port {args.port} (pipeline: {pipe.out})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _queue_summary(pipe: Pipeline, project: Optional[str]) -> tuple[int, int, int]:
    issues = {i.key: i for i in pipe.load_issues(project)}
    queue = build_queue(pipe.load_store(), pipe.load_candidates(), issues)
    return len(queue.pending_links), len(queue.pending_issues), len(queue.conflicts)


def cmd_labels(args) -> int:
    pipe = Pipeline(Path(args.out))
    issues = pipe.load_issues(args.project)
    store = pipe.load_store()
    candidates = store.apply_to_candidates(pipe.load_candidates())
    wanted = [s.strip().lower() for s in args.strategy.split(",") if s.strip()]
    unknown = [s for s in wanted if s not in FIX_STRATEGIES]
    if unknown:
        raise CliError(f"unknown strategy: {', '.join(unknown)}")
    blocking = {"jlm", "jlmiv"} & set(wanted)
    if blocking:
        links_pending, issues_pending, conflicts = _queue_summary(pipe, args.project)
        needs_links = links_pending > 0
        needs_types = "jlmiv" in wanted and (issues_pending > 0 or conflicts > 0)
        if needs_links or needs_types:
            print("validation queues are not empty:")
            print(f"  pending link commits: {links_pending}")
            print(f"  pending issue types:  {issues_pending}")
            print(f"  open conflicts:       {conflicts}")
            print("run `serve` and complete validation, or pass --allow-pending")
            if not args.allow_pending:
                return 3
    for name in wanted:
        strategy = FIX_STRATEGIES[name]
        if strategy == SZZ:
            labels = label_szz(
                [c for c in candidates if c.detector == links_mod.SZZ_NUMBER], issues
            )
        else:
            labels, warnings = label_jl_family(
                candidates, issues, strategy, store.final_issue_types()
            )
            for w in warnings:
                print(f"warning[{name}]: {w}", file=sys.stderr)
        pipe.save_labels(strategy, labels)
        print(f"{strategy}: {len(labels)} fixing commits -> {pipe.labels_path(strategy)}")
    return 0


def cmd_inducing(args) -> int:
    pipe = Pipeline(Path(args.out))
    graph = pipe.load_graph()
    issues = pipe.load_issues(args.project)
    config = _filter_config(args)
    releases = {}
    if args.releases:
        releases = {
            r.name: r.as_version() for r in read_release_table(args.releases, graph)
        }
    wanted = [s.strip().lower() for s in args.strategy.split(",") if s.strip()]
    unknown = [s for s in wanted if s not in INDUCING_STRATEGIES]
    if unknown:
        raise CliError(f"unknown inducing strategy: {', '.join(unknown)}")
    for name in wanted:
        strategy = INDUCING_STRATEGIES[name]
        label_strategy = {"szz": SZZ, "jl-r": JL}.get(name, JLMIV)
        labels = pipe.load_labels(label_strategy)
        result = find_inducing_all(labels, graph, issues, config, strategy, releases)
        for w in result.warnings:
            print(f"warning[{name}]: {w}", file=sys.stderr)
        rows = ["fixing_commit\tpath\tinducing_commit\tissue\tclassification\tstrategy"]
        for c in sorted(
            result.all_changes(),
            key=lambda c: (c.fixing_commit, c.fixing_path, c.inducing_commit, c.issue),
        ):
            rows.append(
                f"{c.fixing_commit}\t{c.fixing_path}\t{c.inducing_commit}\t"
                f"{c.issue}\t{c.classification}\t{strategy}"
            )
        pipe.inducing_path(strategy).write_text("\n".join(rows) + "\n", encoding="utf-8")
        kept = len(result.changes)
        print(
            f"{strategy}: {kept} inducing changes "
            f"({len(result.dropped_hard_suspects)} hard suspects dropped) "
            f"-> {pipe.inducing_path(strategy)}"
        )
    return 0


def _load_inducing(pipe: Pipeline, strategy: str):
    from datetime import datetime, timezone

    from defectmine.inducing import InducingChange

    path = pipe.require(pipe.inducing_path(strategy), "inducing")
    changes = []
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        if not line.strip():
            continue
        fix, fpath, inducing, issue, classification, strat = line.split("\t")
        changes.append(
            InducingChange(
                fixing_commit=fix,
                fixing_path=fpath,
                inducing_commit=inducing,
                issue=issue,
                lines=frozenset(),
                classification=classification,
                boundary_used=datetime.fromtimestamp(0, tz=timezone.utc),
                strategy=strat,
            )
        )
    return changes


def cmd_assign(args) -> int:
    pipe = Pipeline(Path(args.out))
    graph = pipe.load_graph()
    issues = pipe.load_issues(args.project)
    config = _filter_config(args)
    releases = read_release_table(pipe.require(Path(args.releases), "assign --releases"), graph)
    wanted = [s.strip().lower() for s in args.strategy.split(",") if s.strip()]
    unknown = [s for s in wanted if s not in ASSIGN_STRATEGIES]
    if unknown:
        raise CliError(f"unknown assignment strategy: {', '.join(unknown)}")
    label_strategy = FIX_STRATEGIES[args.labels.lower()]
    labels = pipe.load_labels(label_strategy)
    assignments = {}
    for name in wanted:
        for release in releases:
            if name == "6m":
                assignment = assign_6m(graph, release, labels, issues, config, args.window_variant)
            elif name == "av":
                assignment = assign_av(graph, release, labels, issues, releases, config)
            else:
                changes = [
                    c
                    for c in _load_inducing(pipe, INDUCING_STRATEGIES[args.inducing.lower()])
                    if c.classification != "hard_suspect"
                ]
                assignment = assign_ind(graph, release, changes, labels)
            assignments[(name, release.name)] = assignment
    out_path = pipe.out / "assignments.tsv"
    rows = ["strategy\trelease\tissue\tfile"]
    for (name, release_name), assignment in sorted(assignments.items()):
        for issue_key in sorted(assignment.bugs):
            files = sorted(
                p for p, keys in assignment.defective_files.items() if issue_key in keys
            )
            if not files:
                rows.append(f"{name}\t{release_name}\t{issue_key}\t-")
            for path in files:
                rows.append(f"{name}\t{release_name}\t{issue_key}\t{path}")
    out_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"{len(assignments)} assignments -> {out_path}")
    return 0


def cmd_emit(args) -> int:
    pipe = Pipeline(Path(args.out))
    graph = pipe.load_graph()
    issues = pipe.load_issues(args.project)
    config = _filter_config(args)
    releases = read_release_table(pipe.require(Path(args.releases), "emit --releases"), graph)
    label_strategy = FIX_STRATEGIES[args.labels.lower()]
    labels = pipe.load_labels(label_strategy)
    strategy = args.strategy.lower()
    project = args.project or "project"
    out_dir = pipe.datasets_dir / project / strategy
    external = {}
    if args.static_metrics_dir:
        for path in Path(args.static_metrics_dir).glob("*.csv"):
            with path.open() as fh:
                reader = csv.DictReader(fh)
                per_release = {
                    row["file"]: {
                        f"sm_{k}": float(v)
                        for k, v in row.items()
                        if k != "file" and v != ""
                    }
                    for row in reader
                }
            external[path.stem] = per_release
    for release in releases:
        if strategy == "6m":
            assignment = assign_6m(graph, release, labels, issues, config, args.window_variant)
        elif strategy == "av":
            assignment = assign_av(graph, release, labels, issues, releases, config)
        else:
            changes = [
                c
                for c in _load_inducing(pipe, INDUCING_STRATEGIES[args.inducing.lower()])
                if c.classification != "hard_suspect"
            ]
            assignment = assign_ind(graph, release, changes, labels)
        features = churn_features(graph, release, labels, config)
        per_file = {
            path: {f"churn_{k}": v for k, v in feats.items()}
            for path, feats in features.items()
        }
        for path in production_files(graph, release, config):
            lines = graph.file_lines(release.release_commit, path)
            per_file.setdefault(path, {})["lloc"] = float(logical_lines(lines, config.profile))
            for name, value in external.get(release.name, {}).get(path, {}).items():
                per_file[path][name] = value
        emit_dataset(graph, release, assignment, issues, labels, config, out_dir, per_file)
        print(f"{release.name}: dataset -> {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    pipe = Pipeline(Path(args.out))
    strategies = [s.strip().upper() for s in args.strategies.split(",") if s.strip()]
    baseline = args.baseline.upper()
    all_needed = set(strategies) | {baseline}
    per_strategy = {}
    for name in sorted(all_needed):
        labels = pipe.load_labels(name)
        per_strategy[name] = {l.commit for l in labels}
    agreements = {}
    for name in strategies:
        if name == baseline:
            continue
        report = aggregate_agreement(
            {"project": (per_strategy[name], per_strategy[baseline])}
        )
        agreements[f"{name}-vs-{baseline}"] = report
    groups = {
        "fixing-commits": {name: [float(len(per_strategy[name]))] for name in sorted(all_needed)}
    }
    write_stats_report(pipe.reports_dir, agreements, {}, groups)
    print(f"evaluation reports -> {pipe.reports_dir}")
    return 0


def _read_dataset_dir(data_dir: Path, variants: list[str]) -> list[ReleaseDataset]:
    datasets = []
    for project_dir in sorted(p for p in data_dir.iterdir() if p.is_dir()):
        by_release: dict[str, dict] = {}
        for variant in variants:
            vdir = project_dir / variant
            if not vdir.is_dir():
                raise CliError(f"missing dataset variant {variant} under {project_dir}")
            for files_csv in sorted(vdir.glob("*-files.csv")):
                release = files_csv.name[: -len("-files.csv")]
                entry = by_release.setdefault(
                    release, {"features": {}, "labels": {}, "defects": {}, "sizes": {}}
                )
                with files_csv.open() as fh:
                    for row in csv.DictReader(fh):
                        path = row["file"]
                        feats = {
                            k: float(v)
                            for k, v in row.items()
                            if k not in ("file", "bugs") and v != ""
                        }
                        entry["features"][path] = feats
                        entry["sizes"][path] = feats.get("lloc", 1.0)
                        entry["labels"].setdefault(variant, {})[path] = int(row["bugs"]) > 0
                matrix_csv = vdir / f"{release}-matrix.csv"
                defects: list[frozenset[str]] = []
                if matrix_csv.exists():
                    with matrix_csv.open() as fh:
                        rows = list(csv.reader(fh))
                    header = rows[0][1:]
                    per_issue: dict[str, set[str]] = {col: set() for col in header}
                    for row in rows[1:]:
                        for col, cell in zip(header, row[1:]):
                            if cell == "1":
                                per_issue[col].add(row[0])
                    defects = [frozenset(files) for files in per_issue.values() if files]
                entry["defects"][variant] = tuple(defects)
        for release, entry in sorted(by_release.items()):
            datasets.append(
                ReleaseDataset(
                    project=project_dir.name,
                    release=release,
                    features=entry["features"],
                    labels=entry["labels"],
                    defects=entry["defects"],
                    sizes=entry["sizes"],
                )
            )
    return datasets


def cmd_experiment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    variants = [v.strip() for v in args.labels.split(",") if v.strip()]
    datasets = _read_dataset_dir(Path(args.data), variants)
    if not datasets:
        raise CliError(f"no datasets found under {args.data}")
    sample = datasets[0].features
    all_features = sorted({name for feats in sample.values() for name in feats})
    feature_sets = {}
    for fs in (f.strip().lower() for f in args.features.split(",") if f.strip()):
        if fs == "all":
            feature_sets["ALL"] = all_features
        elif fs == "sm":
            sm = [f for f in all_features if f.startswith("sm_")]
            if not sm:
                raise CliError("no static-metric (sm_*) columns in the datasets")
            feature_sets["SM"] = sm
        elif fs == "churn":
            feature_sets["CHURN"] = [f for f in all_features if f.startswith("churn_")]
        else:
            raise CliError(f"unknown feature set {fs!r}")
    result = run_experiment(
        datasets,
        variants,
        feature_sets,
        eval_variant=args.eval_labels or None,
        min_files=args.min_files,
        min_defective=args.min_defective,
    )
    rows = ["model\trelease\tlower\tupper\trecall\tprecision\tf_measure"]
    for o in sorted(result.outcomes, key=lambda o: (o.model, o.release)):
        fmt = lambda v: "undefined" if v is None else f"{v:.6g}"
        rows.append(
            f"{o.model}\t{o.release}\t{o.cost.lower:.6g}\t{o.cost.upper:.6g}\t"
            f"{fmt(o.metrics.recall)}\t{fmt(o.metrics.precision)}\t{fmt(o.metrics.f_measure)}"
        )
    (out / "outcomes.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    models = sorted({o.model for o in result.outcomes})
    summary = {
        "selected_releases": result.selected_releases,
        "never_saves_share": {m: result.never_saves_share(m) for m in models},
    }
    rank_tests = {}
    if len(models) >= 2:
        for which in ("lower", "upper"):
            _releases, model_names, matrix = result.bounds_matrix(which)
            if len(matrix) >= 2:
                rank_tests[f"bounds-{which}"] = friedman_nemenyi(
                    matrix, alpha=args.alpha, treatments=model_names
                )
    write_stats_report(
        out / "reports",
        {},
        rank_tests,
        {
            "bounds-lower": {
                m: [o.cost.lower for o in result.outcomes if o.model == m] for m in models
            },
            "bounds-upper": {
                m: [o.cost.upper for o in result.outcomes if o.model == m] for m in models
            },
        },
    )
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"experiment over {len(result.selected_releases)} releases -> {out}")
    return 0


def cmd_all(args) -> int:
    started = time.time()
    pipe = Pipeline(Path(args.out))
    if args.decisions and Path(args.decisions) != pipe.decisions_path:
        shutil.copyfile(args.decisions, pipe.decisions_path)
    cmd_ingest_vcs(argparse.Namespace(repo=args.repo, out=args.out, heads=None))
    issues_args = argparse.Namespace(
        project=args.project, from_file=args.issues, url=None, out=str(pipe.issues_path)
    )
    cmd_ingest_issues(issues_args)
    cmd_detect_links(
        argparse.Namespace(
            out=args.out, project=args.project, strategy="both", misspellings=args.misspellings
        )
    )
    rc = cmd_labels(
        argparse.Namespace(
            out=args.out,
            project=args.project,
            strategy="szz,jl,jlm,jlmiv",
            allow_pending=False,
        )
    )
    if rc != 0:
        return rc
    cmd_inducing(
        argparse.Namespace(
            out=args.out,
            project=args.project,
            strategy="szz,jlmiv,jlmiv-r",
            filter_config=args.filter_config,
            refactorings=args.refactorings,
            releases=args.releases,
        )
    )
    common = dict(
        out=args.out,
        project=args.project,
        releases=args.releases,
        filter_config=args.filter_config,
        refactorings=args.refactorings,
        labels="jlmiv",
        inducing="jlmiv-r",
        window_variant="fixed",
    )
    cmd_assign(argparse.Namespace(strategy="6m,av,ind", **common))
    cmd_emit(argparse.Namespace(strategy="ind", static_metrics_dir=None, **common))
    cmd_evaluate(
        argparse.Namespace(out=args.out, strategies="szz,jl,jlm", baseline="jlmiv")
    )
    pipe.write_meta("all", started)
    print("pipeline complete")
    return 0


# -- argument parsing -----------------------------------------------------------


def _add_common(p, project=True):
    p.add_argument("--out", required=True, help="pipeline directory")
    if project:
        p.add_argument("--project", default=None, help="issue project key filter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defectmine",
        description="defect labeling toolkit: linking, fix/inducing labels, release datasets",
    )
    parser.add_argument("--config", help="JSON config file; values override flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-vcs", help="read a git repository into the graph cache")
    p.add_argument("--repo", required=True)
    p.add_argument("--heads", nargs="*", help="restrict to these heads (default: all)")
    _add_common(p, project=False)
    p.set_defaults(func=cmd_ingest_vcs)

    p = sub.add_parser("ingest-issues", help="read or fetch the issue export")
    p.add_argument("--project", required=True)
    p.add_argument("--from", dest="from_file", help="line-delimited export file")
    p.add_argument("--url", help="tracker base URL (Jira-style REST)")
    p.add_argument("--out", required=True, help="normalized export destination")
    p.set_defaults(func=cmd_ingest_issues)

    p = sub.add_parser("detect-links", help="build commit-issue link candidates")
    p.add_argument("--strategy", choices=["szz", "jl", "both"], default="both")
    p.add_argument("--misspellings", help="WRONG=CORRECT prefix map file")
    _add_common(p)
    p.set_defaults(func=cmd_detect_links)

    p = sub.add_parser("serve", help="host the validation HTTP API")
    p.add_argument("--port", type=int, default=8571)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--token", required=True, help="shared session token")
    p.add_argument("--allow-reset", action="store_true",
                   help="mount the in-memory reset test hook")
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("labels", help="compute bug-fixing commits per strategy")
    p.add_argument("--strategy", default="szz,jl,jlm,jlmiv")
    p.add_argument("--allow-pending", action="store_true",
                   help="label on the validated subset even with open queues")
    _add_common(p)
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("inducing", help="compute bug-inducing changes")
    p.add_argument("--strategy", default="jlmiv-r")
    p.add_argument("--filter-config", help="JSON language profile / path patterns")
    p.add_argument("--refactorings", help="refactoring report (tsv)")
    p.add_argument("--releases", help="release table (for affected-version boundaries)")
    _add_common(p)
    p.set_defaults(func=cmd_inducing)

    p = sub.add_parser("assign", help="assign bugs to releases")
    p.add_argument("--strategy", default="6m,av,ind")
    p.add_argument("--labels", default="jlmiv", help="fix-label strategy to assign")
    p.add_argument("--inducing", default="jlmiv-r", help="inducing strategy for IND")
    p.add_argument("--releases", required=True)
    p.add_argument("--window-variant", choices=["fixed", "reported"], default="fixed")
    p.add_argument("--filter-config")
    p.add_argument("--refactorings")
    _add_common(p)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("emit", help="write per-release datasets")
    p.add_argument("--strategy", default="ind", help="assignment strategy for labels")
    p.add_argument("--labels", default="jlmiv")
    p.add_argument("--inducing", default="jlmiv-r")
    p.add_argument("--releases", required=True)
    p.add_argument("--window-variant", choices=["fixed", "reported"], default="fixed")
    p.add_argument("--filter-config")
    p.add_argument("--refactorings")
    p.add_argument("--static-metrics-dir", help="per-release csv with external metrics")
    _add_common(p)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("evaluate", help="agreement statistics between strategies")
    p.add_argument("--strategies", default="szz,jl,jlm")
    p.add_argument("--baseline", default="jlmiv")
    _add_common(p, project=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="cross-project prediction experiment")
    p.add_argument("--data", required=True, help="dataset root (project/strategy/*.csv)")
    p.add_argument("--labels", required=True, help="comma list of label variants")
    p.add_argument("--features", default="all", help="all,sm,churn")
    p.add_argument("--eval-labels", default=None)
    p.add_argument("--min-files", type=int, default=100)
    p.add_argument("--min-defective", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("all", help="run the full pipeline")
    p.add_argument("--repo", required=True)
    p.add_argument("--issues", required=True, help="issue export file")
    p.add_argument("--releases", required=True)
    p.add_argument("--decisions", help="decision log to seed the pipeline")
    p.add_argument("--misspellings")
    p.add_argument("--filter-config")
    p.add_argument("--refactorings")
    _add_common(p)
    p.set_defaults(func=cmd_all)

    return parser


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for key, value in raw.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr):
            setattr(args, attr, value)
        else:
            raise CliError(f"config key {key!r} does not match any flag")
    return args


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args)
        return args.func(args)
    except (CliError, PredictError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
