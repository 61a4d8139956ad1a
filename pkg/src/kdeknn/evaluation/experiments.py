"""Utility-evaluation protocols.

1. real data only, repeated over seeds;
2. train on synthetic batches, test on real (test split and external cohort);
3. training sets mixing real and KDE-KNN rows in varying proportions.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from kdeknn.dataset import concat, prepare, split
from kdeknn.evaluation.metrics import auc, roc_curve
from kdeknn.evaluation.models import DEFAULT_SPECS, ClassifierSpec, predict_scores, train
from kdeknn.generators import GenConfig, generate
from kdeknn.rng import make_rng

DEFAULT_SEEDS = (0, 1, 2)
DEFAULT_FRACTIONS = (100, 80, 60, 40, 20, 0)
METHOD_LABELS = {"real": "Real", "smote": "SMOTE", "kde": "KDE", "kde_knn": "KDE-KNN"}


@dataclass
class ExperimentRow:
    method: str
    model: str
    seeds: list
    test_auc: list = field(default_factory=list)
    external_auc: list = field(default_factory=list)
    real_pct: int = None
    roc: dict = field(default_factory=lambda: {"test": [], "external": []}, repr=False)

    @property
    def repeats(self):
        return len(self.test_auc)

    @staticmethod
    def _summary(values):
        return float(np.mean(values)), float(np.var(values))

    @property
    def test_summary(self):
        return self._summary(self.test_auc)

    @property
    def external_summary(self):
        return self._summary(self.external_auc)

    def to_dict(self):
        tm, tv = self.test_summary
        em, ev = self.external_summary
        out = {
            "method": self.method,
            "model": self.model,
            "seeds": list(self.seeds),
            "repeats": self.repeats,
            "test_auc": list(self.test_auc),
            "external_auc": list(self.external_auc),
            "test_mean": tm,
            "test_var": tv,
            "external_mean": em,
            "external_var": ev,
        }
        if self.real_pct is not None:
            out["real_pct"] = self.real_pct
            out["synthetic_pct"] = 100 - self.real_pct
        return out


@dataclass
class ExperimentReport:
    experiment: int
    rows: list
    seeds: list
    fractions: list = None

    def row(self, method, model, real_pct=None):
        for r in self.rows:
            if r.method == method and r.model == model and r.real_pct == real_pct:
                return r
        raise KeyError((method, model, real_pct))

    def to_dict(self):
        out = {
            "experiment": self.experiment,
            "seeds": list(self.seeds),
            "rows": [r.to_dict() for r in self.rows],
        }
        if self.fractions is not None:
            out["fractions"] = list(self.fractions)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self, test_name="Test", external_name="External"):
        def cell(summary):
            return f"{summary[0]:.4f} ± {summary[1]:.4f}"

        if self.experiment == 3:
            header = ["% Real", "% Synthetic", test_name, external_name]
            body = [[str(r.real_pct), str(100 - r.real_pct), cell(r.test_summary), cell(r.external_summary)]
                    for r in self.rows]
        else:
            header = ["Method", "Model", test_name, external_name]
            body = []
            prev = None
            for r in self.rows:
                name = METHOD_LABELS.get(r.method, r.method)
                body.append([name if name != prev else "", _model_label(r.model),
                             cell(r.test_summary), cell(r.external_summary)])
                prev = name
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        fmt = lambda row: " | ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()  # noqa: E731
        rule = "-+-".join("-" * w for w in widths)
        lines = [f"Experiment {self.experiment} (AUC mean ± variance)", fmt(header), rule]
        lines += [fmt(row) for row in body]
        return "\n".join(lines) + "\n"

    def write_roc_csv(self, path):
        """Long-format ROC points: method, model, real_pct, split, repeat, fpr, tpr."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "model", "real_pct", "split", "repeat", "fpr", "tpr"])
            for r in self.rows:
                pct = "" if r.real_pct is None else r.real_pct
                for part in ("test", "external"):
                    for rep, (fpr, tpr) in enumerate(r.roc[part]):
                        for a, b in zip(fpr, tpr):
                            w.writerow([r.method, r.model, pct, part, rep, repr(float(a)), repr(float(b))])


def _model_label(kind):
    return ClassifierSpec(kind).label


def _score(row, model, test, external):
    for part, ds in (("test", test), ("external", external)):
        s = predict_scores(model, ds.features)
        value = auc(s, ds.labels)
        (row.test_auc if part == "test" else row.external_auc).append(value)
        row.roc[part].append(roc_curve(s, ds.labels))


def run_experiment1(train_ds, test_ds, external, specs=DEFAULT_SPECS, seeds=DEFAULT_SEEDS, *,
                    resplit=False, train_fraction=0.85, threads=1):
    """Real data only.

    With ``resplit`` the train and test sets are pooled and re-split with
    each seed; otherwise the given partition is reused and the seed only
    drives model randomness.
    """
    rows = {spec.kind: ExperimentRow("real", spec.kind, list(seeds)) for spec in specs}
    pool = concat([train_ds, test_ds]) if resplit else None
    for seed in seeds:
        tr, te = split(pool, train_fraction, seed) if resplit else (train_ds, test_ds)
        stats, trn, tst, ext = prepare(tr, te, external)
        for spec in specs:
            model = train(spec, trn, seed=seed, threads=threads, norm_stats=stats)
            _score(rows[spec.kind], model, tst, ext)
    return ExperimentReport(1, list(rows.values()), list(seeds))


def run_experiment2(train_ds, test_ds, external, methods=("smote", "kde", "kde_knn"),
                    specs=DEFAULT_SPECS, seeds=DEFAULT_SEEDS, gen_config=None, threads=1):
    """Train on one synthetic batch per seed and method; evaluate on real data."""
    gen_config = gen_config or GenConfig()
    stats, trn, tst, ext = prepare(train_ds, test_ds, external)
    rows = []
    for method in methods:
        method_rows = {spec.kind: ExperimentRow(method, spec.kind, list(seeds)) for spec in specs}
        for seed in seeds:
            batch = generate(method, trn, replace(gen_config, seed=seed), threads=threads)
            for spec in specs:
                model = train(spec, batch.data, seed=seed, threads=threads, norm_stats=stats)
                _score(method_rows[spec.kind], model, tst, ext)
        rows.extend(method_rows.values())
    return ExperimentReport(2, rows, list(seeds))


def _allocate(total, weights):
    """Split ``total`` proportionally to ``weights`` by largest remainder."""
    weights = np.asarray(weights, dtype=np.float64)
    raw = total * weights / weights.sum()
    out = np.floor(raw).astype(int)
    short = total - out.sum()
    for i in np.argsort(-(raw - out), kind="stable")[:short]:
        out[i] += 1
    return out


def mix_training_set(real, synthetic, real_pct, rng):
    """Subsample ``real_pct`` % of rows from ``real`` (stratified) and fill the rest from ``synthetic``.

    The total equals ``real.n_samples``.
    """
    total = real.n_samples
    n_real = int(math.floor(total * real_pct / 100.0 + 0.5))
    n_syn = total - n_real
    if n_syn > synthetic.n_samples:
        raise ValueError(f"synthetic pool has {synthetic.n_samples} rows, need {n_syn}")
    parts = []
    if n_real:
        members = [np.flatnonzero(real.labels == c) for c in (0, 1)]
        per_class = _allocate(n_real, [m.size for m in members])
        rows = np.concatenate([rng.choice(m, size=k, replace=False) for m, k in zip(members, per_class)])
        parts.append(real.subset(np.sort(rows)))
    if n_syn:
        rows = rng.choice(synthetic.n_samples, size=n_syn, replace=False)
        parts.append(synthetic.subset(np.sort(rows)))
    return concat(parts, provenance=f"mix:{real_pct}")


def run_experiment3(train_ds, test_ds, external, fractions=DEFAULT_FRACTIONS,
                    spec=ClassifierSpec("svm_rbf"), seeds=DEFAULT_SEEDS, gen_config=None,
                    pool_seed=None, threads=1):
    """Real/synthetic mixtures at constant training size.

    One KDE-KNN batch as large as the real training set serves as the
    synthetic pool. The all-real and all-synthetic rows are single
    deterministic compositions; mixed rows are resampled once per seed.
    """
    gen_config = gen_config or GenConfig()
    stats, trn, tst, ext = prepare(train_ds, test_ds, external)
    total = trn.n_samples
    pool_seed = seeds[0] if pool_seed is None else pool_seed
    counts = (total - total // 2, total // 2)
    pool = generate("kde_knn", trn, replace(gen_config, per_class_counts=counts, seed=pool_seed),
                    threads=threads).data
    rows = []
    for pct in fractions:
        if not 0 <= pct <= 100:
            raise ValueError(f"real percentage must be within [0, 100], got {pct}")
        fixed = pct in (0, 100)
        row_seeds = [seeds[0]] if fixed else list(seeds)
        row = ExperimentRow("mix", spec.kind, row_seeds, real_pct=int(pct))
        for seed in row_seeds:
            if pct == 100:
                mixed = trn
            elif pct == 0:
                mixed = pool
            else:
                mixed = mix_training_set(trn, pool, pct, make_rng(seed, "mix", int(pct)))
            model = train(spec, mixed, seed=seed, threads=threads, norm_stats=stats)
            _score(row, model, tst, ext)
        rows.append(row)
    return ExperimentReport(3, rows, list(seeds), fractions=[int(f) for f in fractions])
