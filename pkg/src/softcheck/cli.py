"""Command-line pipeline: generate, train, evaluate, sweep.

A run is described by a JSON config file; flags override the file. One
global seed fans out to component seeds via derive_seed(seed, label)
with the labels "data", "split", and "train", so every artifact is
reproducible byte-for-byte from the config alone.
"""

import argparse
import copy
import json
import os
import sys

import numpy as np

from .checksum import ChecksumSpec
from .data import LabeledDataset, SynthSpec, load_csv, save_csv, synth_generate
from .errors import ConfigError, DataError, SoftcheckError
from .losses import VARIANTS, LossConfig
from .metrics import evaluate, save_report, save_scatter
from .network import load_model, save_model
from .seeding import derive_seed
from .training import TrainConfig, save_history, train

CHECKSUM_KINDS_DEFAULT = ("linear", "sinusoid")

DEFAULTS = {
    "seed": 0,
    "out_dir": "out",
    "val_frac": 0.2,
    "tn_rate": 0.99,
    "model": None,
    "dataset": {"synth": {}},
    "checksum": {"kind": "linear", "w": 1e-4},
    "loss": {"variant": "base", "lambda_id": 0.01, "lambda_ood": 0.01, "epsilon": 1e-8},
    "train": {
        "epochs": 500,
        "batch_size": 128,
        "optimizer": "adam",
        "learning_rate": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "adam_eps": 1e-8,
        "hidden_dims": [128, 128, 128],
        "activation": "tanh",
    },
    "ood": {"lo_frac": 0.20, "hi_frac": 0.25, "pool_size": None,
            "batch_size": None, "seed": None},
    "sweep": {"seeds": 5, "variants": list(VARIANTS),
              "checksums": list(CHECKSUM_KINDS_DEFAULT)},
}

_SYNTH_KEYS = {"d", "k", "n_id", "n_ood", "noise_sd", "plane_normal",
               "plane_offset", "function_seed"}


def _check_keys(section: dict, allowed, label: str) -> None:
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"unknown {label} config keys: {sorted(extra)}")


def load_config(path=None) -> dict:
    """Read the JSON config file and fill in defaults."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(user, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    _check_keys(user, DEFAULTS, "top-level")
    for key, value in user.items():
        if key == "dataset":
            cfg["dataset"] = value
        elif isinstance(value, dict):
            _check_keys(value, DEFAULTS[key], key)
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def _synth_spec(section: dict, global_seed: int) -> SynthSpec:
    _check_keys(section, _SYNTH_KEYS, "dataset.synth")
    section = dict(section)
    if section.get("function_seed") is None:
        section["function_seed"] = derive_seed(global_seed, "data")
    normal = section.get("plane_normal")
    if normal is not None:
        section["plane_normal"] = np.asarray(normal, dtype=np.float64)
    return SynthSpec(**section)


def _load_dataset(cfg: dict, global_seed: int) -> LabeledDataset:
    section = cfg["dataset"]
    if not isinstance(section, dict):
        raise ConfigError("dataset config must be a mapping")
    _check_keys(section, {"synth", "csv"}, "dataset")
    has_synth = "synth" in section
    has_csv = "csv" in section
    if has_synth == has_csv:
        raise ConfigError("dataset config needs exactly one of 'synth' or 'csv'")
    if has_csv:
        return load_csv(section["csv"])
    return synth_generate(_synth_spec(section["synth"], global_seed))


def _resolve_split(dataset: LabeledDataset, val_frac: float, split_seed: int):
    """Turn partition tags into (train, validation, ood-or-None) sets.

    Rows tagged ``unsplit`` are split here; datasets that arrive already
    split keep their tags. Mixing the two styles is rejected.
    """
    from .training import split_id

    n_unsplit = dataset.count("unsplit")
    n_train = dataset.count("train")
    n_val = dataset.count("validation")
    if n_unsplit > 0 and (n_train > 0 or n_val > 0):
        raise DataError("dataset mixes 'unsplit' rows with pre-split train/validation tags")
    if n_unsplit > 0:
        tr, va = split_id(dataset.select("unsplit"), val_frac, split_seed)
    elif n_train > 0 and n_val > 0:
        tr, va = dataset.select("train"), dataset.select("validation")
    else:
        raise DataError("dataset has no trainable rows (needs 'unsplit' or "
                        "'train'+'validation' tags)")
    ood = dataset.select("ood") if dataset.count("ood") > 0 else None
    return tr, va, ood


def _train_config(cfg: dict, global_seed: int, loss_cfg: LossConfig,
                  checksum_spec: ChecksumSpec) -> TrainConfig:
    t = cfg["train"]
    o = cfg["ood"]
    return TrainConfig(
        loss=loss_cfg,
        checksum=checksum_spec,
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        optimizer=t["optimizer"],
        learning_rate=t["learning_rate"],
        beta1=t["beta1"],
        beta2=t["beta2"],
        adam_eps=t["adam_eps"],
        seed=derive_seed(global_seed, "train"),
        hidden_dims=tuple(t["hidden_dims"]),
        activation=t["activation"],
        ood_pool_size=o["pool_size"],
        ood_batch_size=o["batch_size"],
        ood_lo_frac=o["lo_frac"],
        ood_hi_frac=o["hi_frac"],
        ood_seed=o["seed"],
    )


def _loss_config(cfg: dict) -> LossConfig:
    section = cfg["loss"]
    return LossConfig.from_variant(
        section["variant"],
        lambda_id=section["lambda_id"],
        lambda_ood=section["lambda_ood"],
        epsilon=section["epsilon"],
    )


def _out_dir(cfg: dict) -> str:
    path = cfg["out_dir"]
    os.makedirs(path, exist_ok=True)
    return path


def cmd_generate(cfg: dict) -> int:
    section = cfg["dataset"]
    if not isinstance(section, dict) or "synth" not in section:
        raise ConfigError("generate requires a dataset.synth config section")
    dataset = _load_dataset(cfg, cfg["seed"])
    path = os.path.join(_out_dir(cfg), "dataset.csv")
    save_csv(dataset, path)
    print(f"wrote {path} ({dataset.n} rows: {dataset.count('unsplit')} unsplit, "
          f"{dataset.count('ood')} ood)")
    return 0


def cmd_train(cfg: dict) -> int:
    seed = cfg["seed"]
    dataset = _load_dataset(cfg, seed)
    tr, va, _ = _resolve_split(dataset, cfg["val_frac"], derive_seed(seed, "split"))
    checksum_spec = ChecksumSpec.from_dict(cfg["checksum"])
    loss_cfg = _loss_config(cfg)
    train_cfg = _train_config(cfg, seed, loss_cfg, checksum_spec)
    params, history = train(train_cfg, tr, va)
    out = _out_dir(cfg)
    model_path = os.path.join(out, "model.json")
    history_path = os.path.join(out, "history.csv")
    save_model(model_path, params, checksum_spec)
    save_history(history, history_path)
    if history:
        last = history[-1]
        print(f"trained {loss_cfg.variant_name}/{checksum_spec.kind} for "
              f"{len(history)} epochs; final val_l_pred={last.val_l_pred:.6g} "
              f"val_l_cs={last.val_l_cs:.6g}")
    else:
        print("trained for 0 epochs (no-op)")
    print(f"wrote {model_path} and {history_path}")
    return 0


def cmd_evaluate(cfg: dict) -> int:
    model_path = cfg.get("model")
    if not model_path:
        raise ConfigError("evaluate needs a model path (--model or config 'model')")
    params, checksum_spec = load_model(model_path)
    seed = cfg["seed"]
    dataset = _load_dataset(cfg, seed)
    _, va, ood = _resolve_split(dataset, cfg["val_frac"], derive_seed(seed, "split"))
    if ood is None:
        raise DataError("evaluate needs rows tagged 'ood' in the dataset")
    report = evaluate(params, va, ood, checksum_spec, tn_rate=cfg["tn_rate"])
    out = _out_dir(cfg)
    report_path = os.path.join(out, "report.json")
    scatter_path = os.path.join(out, "scatter.csv")
    save_report(report, report_path)
    save_scatter(report, scatter_path)
    print(f"threshold={report.threshold:.6g} tn_rate_achieved={report.tn_rate_achieved:.4f} "
          f"fnr99={report.fnr99:.4f} pearson_r={report.pearson_r:.4f}")
    print(f"wrote {report_path} and {scatter_path}")
    return 0


def _sweep_cell(cfg, run_seed, variant, kind, splits):
    tr, va, ood = splits
    if ood is None:
        raise DataError("sweep needs rows tagged 'ood' in the dataset")
    checksum_spec = ChecksumSpec(kind=kind, w=cfg["checksum"]["w"])
    loss_section = cfg["loss"]
    loss_cfg = LossConfig.from_variant(
        variant,
        lambda_id=loss_section["lambda_id"],
        lambda_ood=loss_section["lambda_ood"],
        epsilon=loss_section["epsilon"],
    )
    train_cfg = _train_config(cfg, run_seed, loss_cfg, checksum_spec)
    params, _ = train(train_cfg, tr, va)
    report = evaluate(params, va, ood, checksum_spec, tn_rate=cfg["tn_rate"])
    return report.fnr99


def cmd_sweep(cfg: dict) -> int:
    section = cfg["sweep"]
    n_seeds = int(section["seeds"])
    if n_seeds < 1:
        raise ConfigError(f"sweep.seeds must be >= 1, got {section['seeds']!r}")
    variants = list(section["variants"])
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown sweep variant {v!r}; expected one of {VARIANTS}")
    kinds = list(section["checksums"])
    base_seed = cfg["seed"]

    # one dataset + split per seed, shared by every grid cell
    splits = {}
    for r in range(n_seeds):
        run_seed = base_seed + r
        dataset = _load_dataset(cfg, run_seed)
        splits[run_seed] = _resolve_split(
            dataset, cfg["val_frac"], derive_seed(run_seed, "split")
        )

    rows = []
    for variant in variants:
        for kind in kinds:
            for r in range(n_seeds):
                run_seed = base_seed + r
                try:
                    score = _sweep_cell(cfg, run_seed, variant, kind, splits[run_seed])
                except SoftcheckError as e:
                    print(f"warning: cell ({variant}, {kind}, seed {run_seed}) "
                          f"failed: {e}", file=sys.stderr)
                    score = float("nan")
                rows.append((variant, kind, run_seed, score))

    out = _out_dir(cfg)
    table_path = os.path.join(out, "sweep.csv")
    lines = ["loss_variant,checksum,seed,fnr99"]
    for variant, kind, run_seed, score in rows:
        lines.append(f"{variant},{kind},{run_seed},{float(score)!r}")
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")

    summary_path = os.path.join(out, "sweep_summary.csv")
    lines = ["loss_variant,checksum,mean_fnr99,n_seeds"]
    for variant in variants:
        for kind in kinds:
            scores = [s for v, c, _, s in rows
                      if v == variant and c == kind and not np.isnan(s)]
            mean = float(np.mean(scores)) if scores else float("nan")
            lines.append(f"{variant},{kind},{mean!r},{len(scores)}")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    print(f"wrote {table_path} and {summary_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softcheck",
        description="Checksum-based OOD detection for multi-output regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("generate", "write a synthetic benchmark dataset CSV"),
        ("train", "train a checked regression network"),
        ("evaluate", "calibrate a threshold and score OOD detection"),
        ("sweep", "run the loss-variant x checksum grid over several seeds"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="global seed (overrides config)")
        if name == "evaluate":
            p.add_argument("--model", help="model file to evaluate (overrides config)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg["out_dir"] = args.out
        if args.seed is not None:
            cfg["seed"] = args.seed
        if getattr(args, "model", None) is not None:
            cfg["model"] = args.model
        handler = {
            "generate": cmd_generate,
            "train": cmd_train,
            "evaluate": cmd_evaluate,
            "sweep": cmd_sweep,
        }[args.command]
        return handler(cfg)
    except SoftcheckError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
