"""Command-line entry point: ``radioshift gen | run | report``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 training divergence.
"""
import argparse
import copy
import glob
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .errors import ConfigError, DivergenceError
from .harness import DomainData, DomainSpec, ScenarioKind, ScenarioSpec, TrainConfig, expand_cells
from .harness.scenarios import (
    atomic_write, confusion_to_list, dump_json, fmt_snr, read_results_csv,
    result_rows, rows_to_csv, run_scenario, summarize_rows,
)
from .nnmodels import ResNetConfig
from .sigsynth import DatasetManifest, Domain
from .sigsynth.dataset import DEFAULT_SNR_GRID, read_iqds, write_iqds
from .udalosses import AdaptConfig, Method

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4
SEED_ENV = "RADIOSHIFT_SEED"

DEFAULT_RUN_CONFIG = {
    "dataset": {"SIM": "sim.iqds", "OTA_EMU": "ota_emu.iqds"},
    "model": {"preset": "full"},
    "train": {"preset": "full"},
    "method": ["base", "dann", "mcd", "coral", "star", "jan"],
    "scenario": {
        "kind": "cross-snr",
        "runs": 5,
        "source": {"domain": "SIM", "snr_db": 22},
        "source_snrs": None,
        "target_snrs": None,
        "snrs": None,
        "snr_grid_db": list(DEFAULT_SNR_GRID),
    },
    "output_dir": "results",
    "deterministic": False,
}
_SCENARIO_KEYS = set(DEFAULT_RUN_CONFIG["scenario"])


class IOFailure(Exception):
    """I/O problem with a user-supplied path; the message names the path."""


# -- config -------------------------------------------------------------------------
def _check_keys(section, d, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")


def _preset(section, d, full, desk):
    d = dict(d)
    name = d.pop("preset", "full")
    if name not in ("full", "desk"):
        raise ConfigError(f"{section}.preset must be 'full' or 'desk', got {name!r}")
    try:
        return (desk if name == "desk" else full)(**d)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def model_config(d) -> ResNetConfig:
    _check_keys("model", d, {"preset"} | set(ResNetConfig.__dataclass_fields__))
    return _preset("model", d, ResNetConfig, ResNetConfig.desk)


def train_config(d) -> TrainConfig:
    _check_keys("train", d, {"preset"} | set(TrainConfig.__dataclass_fields__))
    return _preset("train", d, TrainConfig, TrainConfig.desk)


def method_configs(items):
    if isinstance(items, (str, dict)):
        items = [items]
    out = []
    for it in items:
        if isinstance(it, str):
            out.append(AdaptConfig(it))
        else:
            _check_keys("method", it, AdaptConfig.__dataclass_fields__)
            try:
                out.append(AdaptConfig(**it))
            except TypeError as exc:
                raise ConfigError(f"method: {exc}") from None
    if not out:
        raise ConfigError("method: at least one method is required")
    names = [m.method for m in out]
    if len(set(names)) != len(names):
        raise ConfigError("method: duplicate methods")
    return out


def load_run_config(path, seed_env=None):
    """Read, validate and resolve a run config; returns a plain dict."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IOFailure(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    _check_keys("config", raw, DEFAULT_RUN_CONFIG)
    cfg = copy.deepcopy(DEFAULT_RUN_CONFIG)
    for k, v in raw.items():
        if k == "scenario":
            _check_keys("scenario", v, _SCENARIO_KEYS)
            cfg[k].update(v)
        else:
            cfg[k] = v
    base = os.path.dirname(os.path.abspath(path))
    _check_keys("dataset", cfg["dataset"], [d.value for d in Domain])
    cfg["dataset"] = {k: os.path.join(base, v) for k, v in cfg["dataset"].items()}
    cfg["output_dir"] = os.path.join(base, cfg["output_dir"])
    if not isinstance(cfg["deterministic"], bool):
        raise ConfigError("deterministic must be true or false")
    seed_env = os.environ.get(SEED_ENV) if seed_env is None else seed_env
    if seed_env not in (None, ""):
        try:
            cfg["train"] = dict(cfg["train"], seed=int(seed_env))
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {seed_env!r}") from None
    # validate every section now so bad configs fail before any training
    model_config(cfg["model"])
    train_config(cfg["train"])
    method_configs(cfg["method"])
    scenario_cells(cfg["scenario"])
    return cfg


def scenario_cells(sc):
    kind = ScenarioKind.parse(sc["kind"])
    runs = sc.get("runs", 5)
    if not isinstance(runs, int) or runs < 2:
        raise ConfigError("scenario.runs must be an integer >= 2")
    src = sc.get("source")
    if src is not None:
        _check_keys("scenario.source", src, {"domain", "snr_db"})
        try:
            src = DomainSpec(src["domain"], src["snr_db"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"scenario.source: {exc}") from None
    cells = expand_cells(kind, sc.get("snr_grid_db") or DEFAULT_SNR_GRID, source=src,
                         target_snrs=sc.get("target_snrs"), source_snrs=sc.get("source_snrs"),
                         snrs=sc.get("snrs"))
    if not cells:
        raise ConfigError("scenario expands to no cells")
    return kind, runs, cells


# -- run ----------------------------------------------------------------------------
_DATA_CACHE = {}


def _load_data(paths, needed):
    sets = {}
    for dom in sorted(needed):
        if dom not in paths:
            raise ConfigError(f"dataset: no file configured for domain {dom}")
        p = paths[dom]
        if p not in _DATA_CACHE:
            if not os.path.isfile(p):
                raise IOFailure(f"dataset file not found: {p}")
            try:
                _DATA_CACHE[p] = read_iqds(p)
            except OSError as exc:
                raise IOFailure(f"cannot read dataset {p}: {exc.strerror}") from None
            except ValueError as exc:
                raise IOFailure(str(exc)) from None
        ds = _DATA_CACHE[p]
        if ds.domain != dom:
            raise ConfigError(f"dataset {p} holds domain {ds.domain}, configured as {dom}")
        sets[dom] = ds
    return DomainData(sets)


def cell_id(spec: ScenarioSpec):
    return (f"{spec.kind.value}_{spec.source.domain}{fmt_snr(spec.source.snr_db)}"
            f"_{spec.target.domain}{fmt_snr(spec.target.snr_db)}_{spec.method.method.value.lower()}")


def _run_cell(job):
    """Train/evaluate one cell; top-level so process pools can pickle it."""
    spec, paths, train_cfg, model_cfg, ckpt_dir, base_cache = job
    data = _load_data(paths, {spec.source.domain, spec.target.domain})
    ckpt = os.path.join(ckpt_dir, cell_id(spec) + ".rsck")
    os.makedirs(ckpt_dir, exist_ok=True)
    metrics = run_scenario(spec, data, train_cfg, model_cfg, base_cache=base_cache,
                           checkpoint_path=ckpt)
    return spec, metrics


def run_config(cfg, jobs=1, log=print):
    model_cfg = model_config(cfg["model"])
    train_cfg = train_config(cfg["train"])
    methods = method_configs(cfg["method"])
    kind, runs, cells = scenario_cells(cfg["scenario"])
    out = cfg["output_dir"]
    ckpt_dir = os.path.join(out, "checkpoints")
    try:
        os.makedirs(ckpt_dir, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create output dir {out}: {exc.strerror}") from None
    specs = [ScenarioSpec(kind, s, t, m, runs) for s, t in cells for m in methods]
    # fail fast on missing datasets before any training
    _load_data(cfg["dataset"], {d for s in specs for d in (s.source.domain, s.target.domain)})
    dump_json(os.path.join(out, "config.json"), cfg)

    results, t0 = {}, time.time()

    def record(spec, metrics):
        results[cell_id(spec)] = (spec, metrics)
        ordered = [results[cell_id(s)] for s in specs if cell_id(s) in results]
        rows = [r for s, m in ordered for r in result_rows(s, m)]
        atomic_write(os.path.join(out, "results.csv"), rows_to_csv(rows))
        summary = {cell_id(s): dict(m.to_dict(), method=s.method.to_dict(),
                                    source=s.source.label(), target=s.target.label(),
                                    scenario=s.kind.value) for s, m in ordered}
        dump_json(os.path.join(out, "summary.json"), summary)
        dump_json(os.path.join(out, "confusions.json"),
                  {cell_id(s): confusion_to_list(m.confusion) for s, m in ordered})
        log(f"{cell_id(spec)}: mean={metrics.mean:.2f} max={metrics.max:.2f} var={metrics.var:.2f}")

    jobs = 1 if cfg["deterministic"] else max(1, int(jobs))
    if jobs == 1:
        base_cache = {}
        for spec in specs:
            record(*_run_cell((spec, cfg["dataset"], train_cfg, model_cfg, ckpt_dir, base_cache)))
    else:
        with ProcessPoolExecutor(jobs) as pool:
            futs = [pool.submit(_run_cell, (s, cfg["dataset"], train_cfg, model_cfg, ckpt_dir, None))
                    for s in specs]
            for f in futs:
                record(*f.result())
    if not cfg["deterministic"]:
        dump_json(os.path.join(out, "timing.json"), {"elapsed_s": round(time.time() - t0, 3),
                                                     "jobs": jobs})
    return [results[cell_id(s)] for s in specs]


# -- report -------------------------------------------------------------------------
def _fmt2(v):
    return f"{v:.2f}"


def build_report(rows):
    """Summary rows, recovery tables and a text layout from result rows."""
    cells = summarize_rows(rows)
    summary = []
    for key in sorted(cells):
        scen, sd, ss, td, ts, meth = key
        m = cells[key]
        summary.append({"scenario": scen, "source_domain": sd, "source_snr_db": fmt_snr(ss),
                        "target_domain": td, "target_snr_db": fmt_snr(ts), "method": meth,
                        "mean": _fmt2(m.mean), "max": _fmt2(m.max), "var": _fmt2(m.var),
                        "runs": len(m.accuracies)})
    recovery = {}
    for (scen, sd, ss, td, ts, meth), m in cells.items():
        base = cells.get((scen, sd, ss, td, ts, Method.BASE.value.lower()))
        if base is None:
            continue
        name = f"recovery_{scen}_{sd}{fmt_snr(ss)}_{td}.csv"
        recovery.setdefault(name, []).append((ts, meth, m.mean - base.mean))
    return summary, recovery


def table_text(summary):
    """Mean / Max / Var layout: one block per (scenario, source), rows = methods,
    columns = target SNR, each entry Mean / Max / Var."""
    blocks = {}
    for r in summary:
        blocks.setdefault((r["scenario"], r["source_domain"], r["source_snr_db"], r["target_domain"]),
                          []).append(r)
    lines = []
    for (scen, sd, ss, td), rs in sorted(blocks.items()):
        snrs = sorted({float(r["target_snr_db"]) for r in rs})
        methods = sorted({r["method"] for r in rs}, key=lambda m: (m != "base", m))
        lines.append(f"{scen}: source {sd}@{ss} dB -> target {td}")
        lines.append("method".ljust(8) + "".join(f"{fmt_snr(s) + ' dB':>24}" for s in snrs))
        lines.append(" " * 8 + "".join(f"{'Mean / Max / Var':>24}" for _ in snrs))
        idx = {(r["method"], float(r["target_snr_db"])): r for r in rs}
        for m in methods:
            cells = []
            for s in snrs:
                r = idx.get((m, s))
                cells.append(f"{r['mean']} / {r['max']} / {r['var']}" if r else "-")
            lines.append(m.ljust(8) + "".join(f"{c:>24}" for c in cells))
        lines.append("")
    return "\n".join(lines)


def report_dir(path, log=print):
    if not os.path.isdir(path):
        raise IOFailure(f"results directory not found: {path}")
    files = sorted(f for f in glob.glob(os.path.join(path, "*.csv"))
                   if not os.path.basename(f).startswith(("summary", "recovery_")))
    rows = []
    for f in files:
        try:
            rows.extend(read_results_csv(f))
        except ValueError:
            continue        # not a results file
        except OSError as exc:
            raise IOFailure(f"cannot read {f}: {exc.strerror}") from None
    if not rows:
        raise ConfigError(f"no results CSV found in {path}")
    summary, recovery = build_report(rows)
    fields = ["scenario", "source_domain", "source_snr_db", "target_domain", "target_snr_db",
              "method", "mean", "max", "var", "runs"]
    atomic_write(os.path.join(path, "summary.csv"),
                 rows_to_csv([[r[k] for k in fields] for r in summary], header=fields))
    dump_json(os.path.join(path, "summary_table.json"), summary)
    for name, entries in sorted(recovery.items()):
        entries.sort(key=lambda e: (e[0], e[1]))
        atomic_write(os.path.join(path, name),
                     rows_to_csv([[fmt_snr(s), m, _fmt2(v)] for s, m, v in entries],
                                 header=["snr_db", "method", "value"]))
    text = table_text(summary)
    atomic_write(os.path.join(path, "tables.txt"), text + "\n")
    log(text)
    return summary, recovery


# -- gen ----------------------------------------------------------------------------
def load_manifest(path, desk=False):
    d = {}
    if path is not None:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise IOFailure(f"cannot read manifest {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: manifest must be a JSON object")
    base = (DatasetManifest.desk if desk else DatasetManifest.full)(
        d.get("domain", Domain.SIM.value)).to_dict()
    if "domain" in d and "channel" not in d:
        base.pop("channel")      # re-derive the impairment template for the domain
    base.update(d)
    return DatasetManifest.from_dict(base)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def gen_dataset(manifest, out, jobs=1, log=print):
    d = os.path.dirname(os.path.abspath(out))
    try:
        os.makedirs(d, exist_ok=True)
        tmp = out + ".part"

        def on_cell(cell, count):
            si, mi = cell
            log(f"{manifest.domain} snr={fmt_snr(manifest.snr_grid_db[si])} "
                f"mod={manifest.modulations[mi]} frames={count}")

        n = write_iqds(tmp, manifest, jobs, on_cell)
        os.replace(tmp, out)
        atomic_write(out + ".manifest.json",
                     json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write dataset {out}: {exc.strerror}") from None
    log(f"wrote {n} frames to {out} (sha256 {file_sha256(out)})")
    return n


# -- entry point --------------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="radioshift", description=__doc__.splitlines()[0])
    p.add_argument("--print-defaults", action="store_true",
                   help="print the default run config and dataset manifests, then exit")
    sub = p.add_subparsers(dest="cmd")
    g = sub.add_parser("gen", help="synthesize an IQDS dataset")
    g.add_argument("--manifest", help="manifest JSON; keys override the preset")
    g.add_argument("--desk", action="store_true", help="start from the desk-scale preset")
    g.add_argument("--out", help="output path (default: manifest path with .iqds)")
    g.add_argument("--jobs", type=int, default=1)
    r = sub.add_parser("run", help="run the scenario described by a config")
    r.add_argument("--config", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--deterministic", action="store_true")
    rp = sub.add_parser("report", help="summarize results in a directory")
    rp.add_argument("--dir", required=True)
    return p


def defaults_doc():
    return {
        "run_config": DEFAULT_RUN_CONFIG,
        "model_presets": {"full": ResNetConfig().to_dict(), "desk": ResNetConfig.desk().to_dict()},
        "train_presets": {"full": TrainConfig().to_dict(), "desk": TrainConfig.desk().to_dict()},
        "method_defaults": {m.value.lower(): AdaptConfig(m).to_dict() for m in Method},
        "manifest_presets": {"full": DatasetManifest.full().to_dict(),
                             "desk": DatasetManifest.desk().to_dict()},
        "env": {SEED_ENV: "overrides train.seed (the seed base)"},
    }


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.print_defaults:
            print(json.dumps(defaults_doc(), indent=2, sort_keys=True))
            return EXIT_OK
        if args.cmd == "gen":
            if args.manifest is None and not args.desk:
                raise ConfigError("gen needs --manifest, --desk or both")
            m = load_manifest(args.manifest, args.desk)
            out = args.out or (os.path.splitext(args.manifest)[0] + ".iqds" if args.manifest
                               else f"desk_{m.domain.lower()}.iqds")
            gen_dataset(m, out, args.jobs)
        elif args.cmd == "run":
            cfg = load_run_config(args.config)
            if args.deterministic:
                cfg["deterministic"] = True
            run_config(cfg, args.jobs)
        elif args.cmd == "report":
            report_dir(args.dir)
        else:
            build_parser().print_help()
            return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
