"""Command-line entry point.

Verbs: ``train``, ``evaluate``, ``radius``, ``sweep-temp``.  Every schema key
is also a flag (``--train.epochs 100``) and flags override the ``--config``
file, which overrides defaults.  Each command writes a resolved-config
snapshot next to its outputs; re-running from the snapshot reproduces every
CSV/JSON byte.  Exit codes: 0 success, 2 config error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from .data import Dataset, corrupt, load_csv, load_idx, make_gaussian_mixture, split_val_test
from .exceptions import (
    ConfigError,
    DimensionError,
    FormatError,
    MisdkitError,
    ParameterError,
    TrainingError,
    UndefinedMetricError,
)
from .metrics import aurc, detection_report, write_curve_csv
from .model import MLP
from .radius import RadiusConfig, radius_batch, write_radius_csv
from .scores import (
    ScoreConfig,
    TEMPERATURE_GRID,
    confidence_records,
    grids_for_method,
    sweep_hyperparameters,
    write_score_csv,
)
from .seeding import seed_stream
from .training import TrainConfig, train

OUTPUT_ROOT_ENV = "MISDKIT_OUTPUT_ROOT"


# -- config plumbing -------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="misdkit",
        description="Train small classifiers, estimate prediction robust radii, "
        "and evaluate misclassification detection.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("train", "evaluate", "radius", "sweep-temp"):
        p = sub.add_parser(verb, allow_abbrev=False)
        p.add_argument("--config", default=None, help="key = value config file")
        for key, spec in cfgmod.SCHEMA.items():
            p.add_argument(
                f"--{key}",
                dest=key.replace(".", "__"),
                default=None,
                metavar=spec.kind.upper(),
                help=spec.help or None,
            )
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = cfgmod.defaults()
    if args.config is not None:
        cfg.update(cfgmod.parse_config_file(args.config))
    for key in cfgmod.SCHEMA:
        raw = getattr(args, key.replace(".", "__"))
        if raw is not None:
            cfg[key] = cfgmod.coerce(key, raw)
    return cfg


def _out_dir(cfg: dict) -> str:
    out = cfg["out"]
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    os.makedirs(out, exist_ok=True)
    return out


def _require(cfg: dict, key: str) -> str:
    value = cfg[key]
    if not value:
        raise ConfigError(f"missing required config key {key!r}")
    return value


def _build_dataset(cfg: dict, role: str) -> Dataset:
    kind = cfg["dataset.kind"]
    if kind == "gaussian":
        n = cfg["dataset.n_train"] if role == "train" else cfg["dataset.n_eval"]
        return make_gaussian_mixture(
            n,
            cfg["dataset.d"],
            cfg["dataset.k"],
            cfg["dataset.overlap"],
            seed=seed_stream(cfg["seed"], "dataset", role),
            cluster_std=cfg["dataset.cluster_std"],
            means_seed=seed_stream(cfg["seed"], "dataset", "means"),
        )
    if kind == "idx":
        images = _require(cfg, f"dataset.{role}_images")
        labels = _require(cfg, f"dataset.{role}_labels")
        return load_idx(images, labels)
    return load_csv(_require(cfg, f"dataset.{role}_path"))


def _load_model(cfg: dict) -> MLP:
    return MLP.load(_require(cfg, "checkpoint"))


def _radius_config(cfg: dict) -> RadiusConfig:
    return RadiusConfig(
        r_init=cfg["radius.r_init"],
        max_total_passes=cfg["radius.max_total_passes"],
        alpha=cfg["radius.alpha"],
        temperature=cfg["radius.temperature"],
        r_cap=cfg["radius.r_cap"] or None,
        base_attack=cfg["radius.base_attack"],
        pgd_steps=cfg["radius.pgd_steps"],
    )


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_safe(obj), fh, indent=2)
        fh.write("\n")


# -- commands ---------------------------------------------------------------


def cmd_train(cfg: dict) -> int:
    out = _out_dir(cfg)
    train_set = _build_dataset(cfg, "train")
    hidden = cfgmod.parse_int_list(cfg["model.hidden_dims"], "model.hidden_dims")
    scale = cfg["model.input_scale"] or 1.0 / float(train_set.inputs.std())
    model = MLP(
        [train_set.dim, *hidden, train_set.num_classes], seed=cfg["seed"], input_scale=scale
    )
    tcfg = TrainConfig(
        objective=cfg["train.objective"],
        epsilon=cfg["train.epsilon"],
        epochs=cfg["train.epochs"],
        batch_size=cfg["train.batch_size"],
        lr_init=cfg["train.lr_init"],
        momentum=cfg["train.momentum"],
        warmup_epochs=cfg["train.warmup_epochs"],
        schedule=cfg["train.schedule"],
        mixup_alpha=cfg["train.mixup_alpha"] or None,
        mixup_on_rat=cfg["train.mixup_on_rat"],
        temperature=cfg["train.temperature"],
        seed=cfg["seed"],
    )
    model, log = train(model, train_set, tcfg)
    model.save(os.path.join(out, "model.ckpt"))
    log.to_csv(os.path.join(out, "train_log.csv"))
    cfgmod.write_snapshot(cfg, os.path.join(out, "train.resolved.cfg"))
    final_loss, final_acc, _ = log.epochs[-1]
    print(
        f"trained {cfg['train.objective']} model on {train_set.name}: "
        f"loss {final_loss:.4f}, train acc {final_acc:.4f}, checksum {log.final_checksum[:12]}"
    )
    print(f"outputs in {out}")
    return 0


def _records_builder(model, dataset, indices, method: str, rcfg: RadiusConfig):
    def build(temperature: float, eps: float):
        score_cfg = ScoreConfig(
            method=method,
            temperature=temperature,
            preprocess_eps=eps,
            radius_config=rcfg,
        )
        return confidence_records(model, dataset, indices, score_cfg)

    return build


def cmd_evaluate(cfg: dict) -> int:
    out = _out_dir(cfg)
    model = _load_model(cfg)
    eval_set = _build_dataset(cfg, "eval")
    split = split_val_test(eval_set, cfg["split.val_fraction"], cfg["split.seed"])
    test_set = eval_set
    if cfg["eval.corrupt_kind"] != "none":
        test_set = corrupt(
            eval_set, cfg["eval.corrupt_kind"], cfg["eval.corrupt_severity"],
            seed=cfg["eval.corrupt_seed"],
        )
    rcfg = _radius_config(cfg)
    methods = cfgmod.parse_str_list(cfg["eval.methods"])
    if not methods:
        raise ConfigError("eval.methods must name at least one method")
    for method in methods:
        val_builder = _records_builder(model, eval_set, split.val_indices, method, rcfg)
        if cfg["eval.sweep"]:
            T_grid, eps_grid = grids_for_method(method)
            best_T, best_eps, best_aurc, table = sweep_hyperparameters(
                val_builder, T_grid, eps_grid
            )
            with open(os.path.join(out, f"sweep_{method}.csv"), "w", encoding="utf-8") as fh:
                fh.write("T,eps,aurc\n")
                for temp, eps, value in table:
                    fh.write(f"{repr(float(temp))},{repr(float(eps))},{repr(float(value))}\n")
        else:
            best_T, best_eps = cfg["eval.temperature"], cfg["eval.preprocess_eps"]
        test_builder = _records_builder(model, test_set, split.test_indices, method, rcfg)
        records = test_builder(best_T, best_eps)
        report = detection_report(
            records, method=method, dataset=test_set.name, seed=cfg["split.seed"]
        )
        payload = report.to_json_dict()
        payload["temperature"] = best_T
        payload["preprocess_eps"] = best_eps
        _write_json(payload, os.path.join(out, f"report_{method}.json"))
        write_curve_csv(report.curve, os.path.join(out, f"curve_{method}.csv"))
        write_score_csv(records, method, os.path.join(out, f"scores_{method}.csv"))
        auroc_str = "n/a" if report.auroc is None else f"{report.auroc:.4f}"
        fpr_str = "n/a" if report.fpr95 is None else f"{report.fpr95:.4f}"
        print(
            f"{method}: aurc_x1000 {report.aurc_x1000:.3f}, auroc {auroc_str}, "
            f"fpr95 {fpr_str}, acc {report.accuracy:.4f} (T={best_T}, eps={best_eps})"
        )
    cfgmod.write_snapshot(cfg, os.path.join(out, "evaluate.resolved.cfg"))
    print(f"outputs in {out}")
    return 0


def cmd_radius(cfg: dict) -> int:
    out = _out_dir(cfg)
    model = _load_model(cfg)
    eval_set = _build_dataset(cfg, "eval")
    method = cfg["radius.method"]
    rcfg = _radius_config(cfg)
    estimates = radius_batch(model, eval_set, rcfg, method)
    write_radius_csv(estimates, os.path.join(out, f"radius_{method}.csv"))
    preds = model.predict_batch(eval_set.inputs)
    correct = preds == eval_set.labels
    values = np.array([e.value for e in estimates])
    summary = {
        "method": method,
        "n": len(estimates),
        "accuracy": float(correct.mean()),
        "median_radius_correct": float(np.median(values[correct])) if correct.any() else None,
        "median_radius_wrong": float(np.median(values[~correct])) if (~correct).any() else None,
        "n_no_flip": int(sum(not e.flipped for e in estimates)),
        "forward_passes_total": int(sum(e.forward_passes for e in estimates)),
        "backward_passes_total": int(sum(e.backward_passes for e in estimates)),
    }
    _write_json(summary, os.path.join(out, f"radius_summary_{method}.json"))
    cfgmod.write_snapshot(cfg, os.path.join(out, "radius.resolved.cfg"))
    med_c = summary["median_radius_correct"]
    med_w = summary["median_radius_wrong"]
    print(
        f"{method}: median radius correct {med_c}, wrong {med_w}, "
        f"no-flip {summary['n_no_flip']}/{summary['n']}"
    )
    print(f"outputs in {out}")
    return 0


def cmd_sweep_temperature(cfg: dict) -> int:
    out = _out_dir(cfg)
    model = _load_model(cfg)
    eval_set = _build_dataset(cfg, "eval")
    split = split_val_test(eval_set, cfg["split.val_fraction"], cfg["split.seed"])
    grid = cfgmod.parse_float_list(cfg["sweep.t_grid"], "sweep.t_grid") or list(TEMPERATURE_GRID)
    methods = cfgmod.parse_str_list(cfg["sweep.methods"])
    if not methods:
        raise ConfigError("sweep.methods must name at least one method")
    rcfg = _radius_config(cfg)
    rows = []
    for method in methods:
        builder = _records_builder(model, eval_set, split.test_indices, method, rcfg)
        for temp in grid:
            rows.append((method, temp, aurc(builder(temp, cfg["eval.preprocess_eps"]))))
    with open(os.path.join(out, "sweep_temp.csv"), "w", encoding="utf-8") as fh:
        fh.write("method,T,aurc\n")
        for method, temp, value in rows:
            fh.write(f"{method},{repr(float(temp))},{repr(float(value))}\n")
    cfgmod.write_snapshot(cfg, os.path.join(out, "sweep_temp.resolved.cfg"))
    print(f"wrote {len(rows)} rows to {os.path.join(out, 'sweep_temp.csv')}")
    return 0


# -- entry point --------------------------------------------------------------

_VERBS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "radius": cmd_radius,
    "sweep-temp": cmd_sweep_temperature,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _VERBS[args.verb](cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, DimensionError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (TrainingError, UndefinedMetricError, ArithmeticError, MisdkitError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
