"""Command-line front end.

Commands::

    kdeknn simulate    [--config PATH] [--seed N] [--out DIR]
    kdeknn generate    --input CSV [--method kde-knn] [--per-class N [N]]
    kdeknn privacy     --real CSV --synthetic NAME=CSV [NAME=CSV ...]
    kdeknn experiment  --which {1,2,3} [--input CSV --external CSV]

Every command writes its files plus ``manifest.json`` (sha256 per file) into
the output directory, which defaults to ``$KDEKNN_OUT`` or ``./kdeknn_out``.
Exit codes: 0 success, 2 configuration or validation error, 3 generation
stalled, 4 I/O error.
"""

import argparse
import csv
import datetime
import hashlib
import io
import json
import logging
import sys

from kdeknn import __version__
from kdeknn._backend import BACKEND
from kdeknn.config import build_config, validate
from kdeknn.dataset import load_csv, madb_like_spec, prepare, simulate_cohort, sldb_like_spec, split, write_csv
from kdeknn.errors import ConfigError, DataError, GenerationStalled
from kdeknn.evaluation.experiments import run_experiment1, run_experiment2, run_experiment3
from kdeknn.evaluation.models import ClassifierSpec
from kdeknn.generators import GenConfig, generate
from kdeknn.privacy import dcr, dcr_baseline, dcr_histogram, ordering_verdict, privacy_utility_summary

log = logging.getLogger("kdeknn")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STALLED = 3
EXIT_IO = 4


# ---------------------------------------------------------------- helpers

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out_dir, command, cfg, files, extra=None):
    """Hash every output file; the timestamp lives only here."""
    recorded = cfg.to_dict()
    recorded.pop("out")
    manifest = {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "config": recorded,
        "files": {name: {"sha256": _sha256(out_dir / name), "bytes": (out_dir / name).stat().st_size}
                  for name in files},
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def _per_class(cfg):
    counts = tuple(cfg.per_class)
    return counts * 2 if len(counts) == 1 else counts


def gen_config(cfg, seed=None):
    return GenConfig(
        per_class_counts=_per_class(cfg),
        knn_k=cfg.knn_k,
        bandwidth_rule=cfg.bandwidth_rule,
        regularization=cfg.regularization,
        smote_k=cfg.smote_k,
        max_attempts=cfg.max_attempts,
        batch_factor=cfg.batch_factor,
        seed=cfg.seed if seed is None else seed,
    )


def _vector(values, d):
    if values is None:
        return None
    values = tuple(float(v) for v in values)
    return values * d if len(values) == 1 else values


def cohort_specs(cfg):
    """Training and external cohort specs; config values override the benchmark defaults."""
    d = cfg.n_features or 27
    shared = {"n_features": d}
    for name in ("covariance_scale", "band_correlation", "skew"):
        if getattr(cfg, name) is not None:
            shared[name] = getattr(cfg, name)
    if cfg.class_mean_shift is not None:
        shared["class_mean_shift"] = _vector(cfg.class_mean_shift, d)
    train_kw = dict(shared)
    ext_kw = dict(shared)
    if cfg.n_per_class is not None:
        train_kw["n_per_class"] = tuple(cfg.n_per_class)
    if cfg.external_n_per_class is not None:
        ext_kw["n_per_class"] = tuple(cfg.external_n_per_class)
    if cfg.external_drift is not None:
        ext_kw["external_drift"] = _vector(cfg.external_drift, d)
    try:
        return madb_like_spec(**train_kw), sldb_like_spec(**ext_kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid cohort settings: {exc}") from None


def _emit(cfg, summary, table, rows=None):
    """Print the run summary to stdout in the requested format."""
    if cfg.format == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
    elif cfg.format == "csv" and rows:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(table if table.endswith("\n") else table + "\n")


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg):
    validate(cfg, "simulate")
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    train_spec, ext_spec = cohort_specs(cfg)
    cohorts = {
        "cohort.csv": simulate_cohort(train_spec, cfg.seed, "cohort"),
        "external.csv": simulate_cohort(ext_spec, cfg.seed, "external"),
    }
    for name, ds in cohorts.items():
        write_csv(ds, out / name, cfg.label_column)
    specs = {"cohort": train_spec.to_dict(), "external": ext_spec.to_dict()}
    write_manifest(out, "simulate", cfg, list(cohorts), {"seed": cfg.seed, "specs": specs})
    rows = [["file", "rows", "class_0", "class_1"]]
    rows += [[name, ds.n_samples, *ds.class_counts()] for name, ds in cohorts.items()]
    table = "\n".join(f"{r[0]:<14} {r[1]:>6} {r[2]:>8} {r[3]:>8}" for r in rows)
    _emit(cfg, {"out": str(out), "files": {r[0]: r[1] for r in rows[1:]}}, table, rows)
    return EXIT_OK


def cmd_generate(cfg):
    validate(cfg, "generate")
    out = cfg.out_dir
    real = load_csv(cfg.input, cfg.label_column)
    stats, train = prepare(real)
    config = gen_config(cfg)
    batch = generate(cfg.method, train, config, threads=cfg.threads)
    out.mkdir(parents=True, exist_ok=True)
    batch.write(out / "synthetic.csv", out / "synthetic.json",
                stats=stats if cfg.units == "raw" else None, label_column=cfg.label_column)
    (out / "norm_stats.json").write_text(stats.to_json() + "\n", encoding="utf-8")
    files = ["synthetic.csv", "synthetic.json", "norm_stats.json"]
    write_manifest(out, "generate", cfg, files, {"input_sha256": _sha256(cfg.input)})
    side = batch.sidecar()
    rows = [["class", "accepted", "attempted", "acceptance_rate"]]
    rows += [[c, a, n, r] for c, (a, n, r) in enumerate(zip(side["counts"], side["attempted"],
                                                           side["acceptance_rates"]))]
    table = f"{side['method']} seed={side['seed']} units={cfg.units}\n" + "\n".join(
        f"class {c}: {a} accepted of {n} attempted (rate {r:.4f})" for c, a, n, r in rows[1:])
    _emit(cfg, side, table, rows)
    return EXIT_OK


def _auc_by_method(report_path, model):
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    try:
        return {r["method"]: r["test_mean"] for r in report["rows"] if r["model"] == model}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{report_path} is not an experiment report: missing {exc}") from None


def cmd_privacy(cfg):
    validate(cfg, "privacy")
    out = cfg.out_dir
    real = load_csv(cfg.real, cfg.label_column)
    names = [name for name, _ in cfg.synthetic]
    if len(set(names)) != len(names) or "baseline" in names:
        raise ConfigError("synthetic set names must be unique and not 'baseline'")
    synthetic = [load_csv(path, cfg.label_column) for _, path in cfg.synthetic]
    for name, ds in zip(names, synthetic):
        if ds.feature_names != real.feature_names:
            raise ConfigError(f"synthetic set {name!r} has different feature columns from the real set")
    _, real_n, *syn_n = prepare(real, *synthetic)

    baseline = dcr_histogram(dcr_baseline(real_n.features, threads=cfg.threads), cfg.bins)
    reports = {name: dcr_histogram(dcr(real_n.features, s.features, cfg.direction, cfg.threads), cfg.bins)
               for name, s in zip(names, syn_n)}
    means = {name: r.mean_dcr for name, r in reports.items()}
    verdict = ordering_verdict(means, baseline.mean_dcr)

    out.mkdir(parents=True, exist_ok=True)
    result = {
        "direction": cfg.direction,
        "baseline": baseline.to_dict(),
        "sets": {name: r.to_dict() for name, r in reports.items()},
        "verdict": verdict,
    }
    if cfg.auc_report:
        model = cfg.models[0] if "models" in cfg.sources else "svm_rbf"
        aucs = _auc_by_method(cfg.auc_report, model)
        result["privacy_utility"] = privacy_utility_summary(means, aucs, baseline.mean_dcr)
        result["privacy_utility"]["model"] = model
    _write_json(out / "dcr.json", result)
    files = ["dcr.json"]
    baseline.write_histogram_csv(out / "dcr_hist_baseline.csv")
    files.append("dcr_hist_baseline.csv")
    for name, r in reports.items():
        r.write_histogram_csv(out / f"dcr_hist_{name}.csv")
        files.append(f"dcr_hist_{name}.csv")
    write_manifest(out, "privacy", cfg, files)

    rows = [["set", "mean_dcr"], ["baseline", baseline.mean_dcr]] + [[n, m] for n, m in means.items()]
    table = "\n".join(f"{n:<20} {m:.4f}" for n, m in rows[1:]) + "\n" + verdict
    summary = {"baseline": baseline.mean_dcr, "mean_dcr": means, "verdict": verdict}
    _emit(cfg, summary, table, rows)
    if cfg.format != "table":
        print(verdict, file=sys.stderr)
    return EXIT_OK


def _experiment_data(cfg):
    if cfg.input is not None:
        pool = load_csv(cfg.input, cfg.label_column)
        external = load_csv(cfg.external, cfg.label_column)
        if external.feature_names != pool.feature_names:
            raise ConfigError("input and external cohorts have different feature columns")
    else:
        train_spec, ext_spec = cohort_specs(cfg)
        pool = simulate_cohort(train_spec, cfg.seed, "cohort")
        external = simulate_cohort(ext_spec, cfg.seed, "external")
    return pool, external


def cmd_experiment(cfg):
    validate(cfg, "experiment")
    out = cfg.out_dir
    try:
        specs = tuple(ClassifierSpec(kind) for kind in cfg.models)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    pool, external = _experiment_data(cfg)
    seeds = list(cfg.seeds)
    train_ds, test_ds = split(pool, cfg.train_fraction, seeds[0])
    which = cfg.which
    if which == 1:
        report = run_experiment1(train_ds, test_ds, external, specs, seeds, resplit=cfg.resplit,
                                 train_fraction=cfg.train_fraction, threads=cfg.threads)
    elif which == 2:
        report = run_experiment2(train_ds, test_ds, external, cfg.methods, specs, seeds,
                                 gen_config(cfg), threads=cfg.threads)
    else:
        spec = specs[0] if "models" in cfg.sources else ClassifierSpec("svm_rbf")
        report = run_experiment3(train_ds, test_ds, external, cfg.fractions, spec, seeds,
                                 gen_config(cfg), threads=cfg.threads)

    out.mkdir(parents=True, exist_ok=True)
    stem = f"experiment{which}"
    (out / f"{stem}.json").write_text(report.to_json() + "\n", encoding="utf-8")
    table = report.to_table()
    (out / f"{stem}.txt").write_text(table, encoding="utf-8")
    report.write_roc_csv(out / f"{stem}_roc.csv")
    write_manifest(out, "experiment", cfg, [f"{stem}.json", f"{stem}.txt", f"{stem}_roc.csv"])

    rows = [["method", "model", "real_pct", "test_mean", "test_var", "external_mean", "external_var"]]
    for r in report.rows:
        d = r.to_dict()
        rows.append([d["method"], d["model"], d.get("real_pct", ""), d["test_mean"], d["test_var"],
                     d["external_mean"], d["external_var"]])
    _emit(cfg, report.to_dict(), table, rows)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "generate": cmd_generate,
    "privacy": cmd_privacy,
    "experiment": cmd_experiment,
}


# ---------------------------------------------------------------- parsing

def _shared_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="INI file; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR", help="output directory (default $KDEKNN_OUT or ./kdeknn_out)")
    p.add_argument("--threads", type=int)
    p.add_argument("--format", choices=("json", "table", "csv"), help="stdout summary format")
    p.add_argument("--label-column", dest="label_column")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _cohort_flags(p):
    g = p.add_argument_group("simulated cohort")
    g.add_argument("--n-per-class", dest="n_per_class", type=int, nargs=2, metavar=("N0", "N1"))
    g.add_argument("--external-n-per-class", dest="external_n_per_class", type=int, nargs=2,
                   metavar=("N0", "N1"))
    g.add_argument("--n-features", dest="n_features", type=int)
    g.add_argument("--class-mean-shift", dest="class_mean_shift", type=float, nargs="+")
    g.add_argument("--external-drift", dest="external_drift", type=float, nargs="+")
    g.add_argument("--covariance-scale", dest="covariance_scale", type=float)
    g.add_argument("--band-correlation", dest="band_correlation", type=float)
    g.add_argument("--skew", type=float)


def _generator_flags(p):
    g = p.add_argument_group("generator")
    g.add_argument("--per-class", dest="per_class", type=int, nargs="+", metavar="N",
                   help="synthetic rows per class (one value for both, or two)")
    g.add_argument("--knn-k", dest="knn_k", type=int)
    g.add_argument("--smote-k", dest="smote_k", type=int)
    g.add_argument("--bandwidth-rule", dest="bandwidth_rule", choices=("scott", "silverman"))
    g.add_argument("--regularization", type=float)
    g.add_argument("--max-attempts", dest="max_attempts", type=int)
    g.add_argument("--batch-factor", dest="batch_factor", type=int)


def build_parser():
    shared = _shared_flags()
    parser = argparse.ArgumentParser(prog="kdeknn", description="KDE-KNN synthetic data toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[shared], help="write simulated training and external cohorts")
    _cohort_flags(p)

    p = sub.add_parser("generate", parents=[shared], help="generate a synthetic batch from a CSV")
    p.add_argument("--input", metavar="CSV")
    p.add_argument("--method", choices=("kde-knn", "kde_knn", "kde", "smote"))
    p.add_argument("--units", choices=("raw", "normalized"))
    _generator_flags(p)

    p = sub.add_parser("privacy", parents=[shared], help="distance-to-closest-record audit")
    p.add_argument("--real", metavar="CSV")
    p.add_argument("--synthetic", nargs="+", metavar="NAME=CSV")
    p.add_argument("--bins", type=int)
    p.add_argument("--direction", choices=("synthetic_to_real", "real_to_synthetic"))
    p.add_argument("--auc-report", dest="auc_report", metavar="JSON",
                   help="experiment-2 report whose AUCs are paired with the DCR means")
    p.add_argument("--models", nargs="+", help="model whose AUC is paired (default svm_rbf)")

    p = sub.add_parser("experiment", parents=[shared], help="run an evaluation protocol")
    p.add_argument("--which", type=int, choices=(1, 2, 3))
    p.add_argument("--input", metavar="CSV", help="training cohort (split into train/test)")
    p.add_argument("--external", metavar="CSV", help="external validation cohort")
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--models", nargs="+")
    p.add_argument("--methods", nargs="+")
    p.add_argument("--fractions", type=int, nargs="+")
    p.add_argument("--no-resplit", dest="resplit", action="store_const", const=False)
    _cohort_flags(p)
    _generator_flags(p)
    return parser


def _overrides(args):
    skip = {"command", "config", "verbose"}
    out = {}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        if isinstance(value, list):
            value = tuple(value)
        if key == "synthetic":
            value = " ".join(value)
        if key == "method":
            value = value.replace("-", "_")
        out[key] = value
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = build_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg)
    except GenerationStalled as exc:
        print(f"error: generation stalled: {exc}", file=sys.stderr)
        return EXIT_STALLED
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
