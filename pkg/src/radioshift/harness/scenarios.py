"""Scenario execution, sweeps and result files."""
import csv
import io
import json
import os
import tempfile

import numpy as np

from ..errors import ConfigError
from ..udalosses import AdaptConfig, Method
from .config import DomainSpec, ScenarioKind, ScenarioSpec, TrainConfig
from .data import split_dataset, unlabeled
from .metrics import RunMetrics
from .train import evaluate, train_method

CSV_HEADER = ["method", "scenario", "source_domain", "source_snr_db", "target_domain",
              "target_snr_db", "run", "accuracy_pct"]


class DomainData:
    """Loaded datasets keyed by domain name ("SIM", "OTA_EMU")."""

    def __init__(self, sets: dict):
        self.sets = dict(sets)

    def get(self, spec: DomainSpec):
        if spec.domain not in self.sets:
            raise FileNotFoundError(f"no dataset loaded for domain {spec.domain}")
        return self.sets[spec.domain].at_snr(spec.snr_db)


def run_scenario(spec: ScenarioSpec, data: DomainData, train_cfg: TrainConfig, model_cfg,
                 base_cache=None, on_run=None, checkpoint_path=None) -> RunMetrics:
    """Train/evaluate ``spec.runs`` times; run ``f`` uses fold ``f`` and seed ``seed + f``.

    ``base_cache`` (a dict) lets baseline models be reused across targets
    that share the same source cell, fold and seed.
    """
    src_all = data.get(spec.source)
    tgt_all = src_all if spec.kind is ScenarioKind.IN_DOMAIN else data.get(spec.target)
    accs, cm, bundle = [], None, None
    for f in range(spec.runs):
        seed = train_cfg.seed + f
        src_tr, _ = split_dataset(src_all, f, spec.runs)
        tgt_tr, tgt_ev = split_dataset(tgt_all, f, spec.runs)
        if spec.method.method is Method.BASE and base_cache is not None:
            key = (spec.source, f, spec.runs, seed)
            if key not in base_cache:
                base_cache[key] = train_method(src_tr, None, spec.method, train_cfg, model_cfg, seed)
            bundle = base_cache[key]
        else:
            bundle = train_method(src_tr, unlabeled(tgt_tr), spec.method, train_cfg, model_cfg, seed)
        acc, cm = evaluate(bundle, tgt_ev)
        accs.append(acc)
        if on_run is not None:
            on_run(f, acc)
    if checkpoint_path is not None and bundle is not None:
        bundle.save(checkpoint_path)
    return RunMetrics(accs, cm)


def expand_cells(kind, snr_grid, source=None, target_snrs=None, source_snrs=None,
                 snrs=None):
    """(source, target) DomainSpec pairs for a scenario family.

    cross-snr: ``source`` against every other grid SNR (or ``target_snrs``),
    same domain. snr-matched: SIM@g -> OTA_EMU@g for each g in ``snrs``.
    stepwise: SIM sources x OTA_EMU targets. in-domain: each SNR against itself.
    """
    kind = ScenarioKind.parse(kind)
    grid = [float(s) for s in snr_grid]
    if kind is ScenarioKind.CROSS_SNR:
        if source is None:
            source = DomainSpec("SIM", max(grid))
        targets = target_snrs if target_snrs is not None else [g for g in grid if g != source.snr_db]
        return [(source, DomainSpec(source.domain, t)) for t in targets]
    if kind is ScenarioKind.SNR_MATCHED:
        snrs = snrs if snrs is not None else [g for g in grid if g != max(grid)]
        return [(DomainSpec("SIM", g), DomainSpec("OTA_EMU", g)) for g in snrs]
    if kind is ScenarioKind.STEPWISE:
        sources = source_snrs if source_snrs is not None else [g for g in grid if g >= 10]
        targets = target_snrs if target_snrs is not None else [g for g in grid if g != max(grid)]
        return [(DomainSpec("SIM", s), DomainSpec("OTA_EMU", t)) for s in sources for t in targets]
    domain = source.domain if source is not None else "SIM"
    snrs = snrs if snrs is not None else [g for g in grid if g != max(grid)]
    return [(DomainSpec(domain, g), DomainSpec(domain, g)) for g in snrs]


def stepwise_sweep(data: DomainData, source_snrs, target_snrs, methods, train_cfg, model_cfg,
                   runs=5, base_cache=None):
    """Full SIM -> OTA_EMU grid; returns ``(metrics, recovery)``.

    ``metrics[(src, tgt, method)]`` is a :class:`RunMetrics`;
    ``recovery[(src, tgt, method)]`` is its mean minus the BASE mean of that cell.
    """
    base_cache = {} if base_cache is None else base_cache
    methods = [m if isinstance(m, AdaptConfig) else AdaptConfig(m) for m in methods]
    if not any(m.method is Method.BASE for m in methods):
        methods = [AdaptConfig(Method.BASE)] + methods
    metrics = {}
    for s in source_snrs:
        for t in target_snrs:
            for m in methods:
                spec = ScenarioSpec(ScenarioKind.STEPWISE, DomainSpec("SIM", s),
                                    DomainSpec("OTA_EMU", t), m, runs)
                metrics[(float(s), float(t), m.method.value)] = run_scenario(
                    spec, data, train_cfg, model_cfg, base_cache)
    recovery = {k: v.mean - metrics[(k[0], k[1], Method.BASE.value)].mean for k, v in metrics.items()}
    return metrics, recovery


def recovery_over_base(cell_means: dict):
    """{method: mean} -> {method: mean - base mean}."""
    if Method.BASE.value not in cell_means:
        raise ConfigError("cell has no BASE result")
    base = cell_means[Method.BASE.value]
    return {m: v - base for m, v in cell_means.items()}


# -- result files ---------------------------------------------------------------------
def fmt_snr(v):
    return f"{float(v):g}"


def result_rows(spec: ScenarioSpec, metrics: RunMetrics):
    return [[spec.method.method.value.lower(), spec.kind.value, spec.source.domain,
             fmt_snr(spec.source.snr_db), spec.target.domain, fmt_snr(spec.target.snr_db),
             str(i), f"{a:.4f}"] for i, a in enumerate(metrics.accuracies)]


def atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows, header=CSV_HEADER):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def read_results_csv(path):
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {r.fieldnames}")
        return list(r)


def summarize_rows(rows):
    """Group result rows into cells -> RunMetrics, keyed by the cell tuple."""
    cells = {}
    for r in rows:
        key = (r["scenario"], r["source_domain"], float(r["source_snr_db"]),
               r["target_domain"], float(r["target_snr_db"]), r["method"])
        cells.setdefault(key, {})[int(r["run"])] = float(r["accuracy_pct"])
    return {k: RunMetrics([v[i] for i in sorted(v)]) for k, v in cells.items()}


def dump_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def confusion_to_list(cm):
    return None if cm is None else np.asarray(cm).tolist()
