"""Command-line entry point: ``mgal {train,sweep,export,synth}``.

Configuration resolves in three layers: dataclass defaults, then a flat
``key = value`` file (``--config``), then flags. Keys are the experiment
fields (``method``, ``ratio``, ``runs``, ...) plus ``model.<field>`` and
``train.<field>``. The fully resolved configuration is written next to
every result as ``config.txt`` and can be fed back with ``--config``.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from mgal.dataio import fmt, load_dataset, parse_key_values, write_dataset
from mgal.errors import ConfigError, ValidationError
from mgal.graphcore import PRESETS, MultiGraphDataset, preset, renormalize, synth_multiview
from mgal.harness import METHODS, ExperimentSpec, graph_count_sweep, run_experiment
from mgal.model import ModelConfig, embed, generator_keys, load_params, save_params
from mgal.training import TrainConfig

SPEC_KEYS = ("method", "view", "ratio", "runs", "validation_fraction", "subset_cap")
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig) if f.name != "seed")
MODEL_KEYS = tuple(f.name for f in fields(ModelConfig))


@dataclass
class CliConfig:
    spec: ExperimentSpec = field(default_factory=ExperimentSpec)
    dataset: str = "synthetic:default"
    seed: int = 0

    def items(self) -> list[tuple[str, str]]:
        out = [("dataset", self.dataset), ("seed", str(self.seed))]
        out += [(k, _show(getattr(self.spec, k))) for k in SPEC_KEYS]
        out += [(f"model.{k}", _show(getattr(self.spec.model, k))) for k in MODEL_KEYS]
        out += [(f"train.{k}", _show(getattr(self.spec.train, k))) for k in TRAIN_KEYS]
        return out

    def snapshot(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())


def _show(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(x) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(key: str, text: str, like):
    try:
        if isinstance(like, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return low in ("true", "1")
        if isinstance(like, tuple):
            return tuple(int(x) for x in text.split(",") if x.strip())
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {text!r}") from None


def apply_settings(cfg: CliConfig, settings: dict[str, str]) -> CliConfig:
    spec_kw, model_kw, train_kw = {}, {}, {}
    dataset, seed = cfg.dataset, cfg.seed
    for key, text in settings.items():
        if key == "dataset":
            dataset = text
        elif key == "seed":
            seed = _parse(key, text, 0)
        elif key == "view":
            spec_kw["view"] = None if text.lower() == "none" else _parse(key, text, 0)
        elif key in SPEC_KEYS:
            spec_kw[key] = _parse(key, text, getattr(cfg.spec, key))
        elif key.startswith("model.") and key[6:] in MODEL_KEYS:
            model_kw[key[6:]] = _parse(key, text, getattr(cfg.spec.model, key[6:]))
        elif key.startswith("train.") and key[6:] in TRAIN_KEYS:
            train_kw[key[6:]] = _parse(key, text, getattr(cfg.spec.train, key[6:]))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    spec = replace(cfg.spec, model=replace(cfg.spec.model, **model_kw),
                   train=replace(cfg.spec.train, **train_kw), base_seed=seed, **spec_kw)
    return CliConfig(spec, dataset, seed)


def resolve_config(args: argparse.Namespace) -> CliConfig:
    cfg = CliConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        cfg = apply_settings(cfg, parse_key_values(path.read_text(), what=str(path)))
    flags = {}
    for name, key in (("seed", "seed"), ("method", "method"), ("ratio", "ratio"), ("runs", "runs"),
                      ("view", "view"), ("lam", "train.lam"), ("head", "model.head"), ("epochs", "train.epochs")):
        value = getattr(args, name, None)
        if value is not None:
            flags[key] = str(value)
    if getattr(args, "synthetic", None):
        flags["dataset"] = f"synthetic:{args.synthetic}"
    if getattr(args, "dataset", None):
        flags["dataset"] = str(args.dataset)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        flags[k.strip()] = v.strip()
    return apply_settings(cfg, flags)


def build_dataset(source: str, seed: int) -> MultiGraphDataset:
    if source.startswith("synthetic:"):
        return synth_multiview(preset(source.split(":", 1)[1], seed=seed))
    return load_dataset(source)


# --- commands -----------------------------------------------------------------

def _write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]):
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def _method_label(spec: ExperimentSpec) -> str:
    return f"gcn_single({spec.view})" if spec.method == "gcn_single" else spec.method


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    ds = build_dataset(cfg.dataset, cfg.seed)
    cfg.spec.validate(ds.m)
    out = Path(args.out)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.snapshot())
    result = run_experiment(ds, cfg.spec)
    row = [_method_label(cfg.spec), _show(cfg.spec.ratio), f"{result.mean:.6f}", f"{result.std:.6f}",
           str(cfg.spec.runs), ",".join(f"{a:.6f}" for a in result.accuracies),
           ",".join(str(e) for e in result.stopped_epochs)]
    _write_table(out / "results.tsv", ["method", "ratio", "mean", "std", "runs", "accuracies", "stopped_epochs"], [row])
    for i, (report, params) in enumerate(zip(result.reports, result.params)):
        (out / "curves" / f"run{i}.jsonl").write_text("".join(l + "\n" for l in report.log_lines()))
        meta = {"dataset": cfg.dataset, "data_seed": cfg.seed, "run_seed": result.seeds[i],
                "method": cfg.spec.method, "final_activation": _show(cfg.spec.model.final_activation)}
        save_params(out / "checkpoints" / f"run{i}.npz", params, meta)
    print(f"{row[0]} ratio={row[1]} accuracy {100 * result.mean:.2f} +- {100 * result.std:.2f} "
          f"over {cfg.spec.runs} runs -> {out / 'results.tsv'}")
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    ds = build_dataset(cfg.dataset, cfg.seed)
    if ds.m < 2:
        raise ConfigError(f"sweep needs a dataset with at least two views, got m={ds.m}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.snapshot())
    sweep = graph_count_sweep(ds, cfg.spec)
    _write_table(out / "sweep.tsv", ["size", "mean", "subsets"],
                 [[str(s), f"{mean:.6f}", str(k)] for s, mean, k in sweep.table()])
    raw = []
    for s in sweep.sizes:
        for sub in sweep.subsets[s]:
            r = sweep.results[sub]
            raw += [[str(s), "+".join(map(str, sub)), str(seed), f"{acc:.6f}"]
                    for seed, acc in zip(r.seeds, r.accuracies)]
    _write_table(out / "sweep_raw.tsv", ["size", "views", "seed", "accuracy"], raw)
    for s, mean, k in sweep.table():
        print(f"size {s}: {100 * mean:.2f} ({k} subsets)")
    return 0


def export_embeddings(params: dict[str, np.ndarray], ds: MultiGraphDataset, out: Path,
                      final_activation: bool = False) -> list[Path]:
    keys = generator_keys(params)
    if not keys:
        raise ValidationError("checkpoint holds no generator weights")
    if params[keys[0]].shape[0] != ds.d:
        raise ValidationError(f"checkpoint expects {params[keys[0]].shape[0]} features, dataset has {ds.d}")
    Z = embed(params, ds.X, [renormalize(a) for a in ds.views],
              ModelConfig(final_activation=final_activation))
    k = Z[0].shape[1]
    out.mkdir(parents=True, exist_ok=True)

    def write(path, header, block):
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row, y in zip(block, ds.labels):
                fh.write(",".join(fmt(x) for x in row) + f",{int(y)}\n")
        return path

    names = [[f"v{v}_z{j}" for j in range(k)] for v in range(ds.m)]
    paths = [write(out / f"view{v}.csv", names[v] + ["label"], z) for v, z in enumerate(Z)]
    paths.append(write(out / "concat.csv", sum(names, []) + ["label"], np.hstack(Z)))
    return paths


def cmd_export(args) -> int:
    params, meta = load_params(args.checkpoint)
    if args.synthetic or args.dataset:
        source = f"synthetic:{args.synthetic}" if args.synthetic else str(args.dataset)
        seed = args.seed if args.seed is not None else 0
    elif "dataset" in meta:
        source, seed = meta["dataset"], int(meta.get("data_seed", 0))
    else:
        raise ConfigError("no dataset given and the checkpoint does not name one")
    ds = build_dataset(source, seed)
    paths = export_embeddings(params, ds, Path(args.out), meta.get("final_activation") == "true")
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 0
    ds = synth_multiview(preset(args.synthetic, seed=seed))
    manifest = write_dataset(ds, Path(args.out))
    print(f"wrote {ds.name}: n={ds.n} d={ds.d} m={ds.m} c={ds.c} -> {manifest}")
    return 0


# --- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgal", description="Multi-graph adversarial node classification")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_flags(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--synthetic", choices=PRESETS, help="synthetic preset")
        src.add_argument("--dataset", help="path to a dataset manifest")
        p.add_argument("--seed", type=int, help="root seed (dataset sampling, splits, initialization)")
        p.add_argument("--out", required=True, help="output directory")

    def exp_flags(p):
        data_flags(p)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--method", choices=METHODS)
        p.add_argument("--view", type=int, help="view index for gcn_single")
        p.add_argument("--ratio", type=float, help="fraction of labeled nodes per class")
        p.add_argument("--runs", type=int)
        p.add_argument("--lambda", dest="lam", type=float, help="adversarial loss weight")
        p.add_argument("--head", choices=("fc", "gconv"))
        p.add_argument("--epochs", type=int, help="maximum epochs")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")

    p = sub.add_parser("train", help="run one experiment over several seeds")
    exp_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="accuracy against number of graphs")
    exp_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="write learned representations as CSV")
    data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth", help="write a synthetic dataset to disk")
    p.add_argument("--synthetic", choices=PRESETS, default="default")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"mgal {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
