"""Experiment configuration: schema, file parsing, and resolved snapshots.

The on-disk format is UTF-8 text, one ``key = value`` per line, ``#`` starts
a comment, and sections are spelled with dotted keys (``train.lr_init``).
Every key is validated against the schema below and unknown keys are
rejected.  A command's resolved snapshot lists every key with its final
value; feeding the snapshot back reproduces the run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import ConfigError

_MISSING = object()


@dataclass(frozen=True)
class _Key:
    kind: str  # int | float | bool | str
    default: object
    choices: tuple | None = None
    help: str = ""


SCHEMA: dict[str, _Key] = {
    "seed": _Key("int", 0, help="master seed; all randomness derives from it"),
    "out": _Key("str", "runs/exp", help="output directory (relative paths live under $MISDKIT_OUTPUT_ROOT)"),
    "checkpoint": _Key("str", "", help="model checkpoint consumed by evaluate/radius/sweep-temp"),
    # dataset
    "dataset.kind": _Key("str", "gaussian", ("gaussian", "idx", "csv")),
    "dataset.n_train": _Key("int", 2000),
    "dataset.n_eval": _Key("int", 1000),
    "dataset.d": _Key("int", 16),
    "dataset.k": _Key("int", 3),
    "dataset.overlap": _Key("float", 3.0, help="class-mean separation in cluster-std units"),
    "dataset.cluster_std": _Key("float", 1.0),
    "dataset.train_images": _Key("str", ""),
    "dataset.train_labels": _Key("str", ""),
    "dataset.eval_images": _Key("str", ""),
    "dataset.eval_labels": _Key("str", ""),
    "dataset.train_path": _Key("str", ""),
    "dataset.eval_path": _Key("str", ""),
    # model
    "model.hidden_dims": _Key("str", "32", help="comma-separated hidden widths; empty for a linear probe"),
    "model.input_scale": _Key("float", 0.0, help="fixed input normalization gain; 0 means 1 / train-feature std"),
    # training
    "train.objective": _Key("str", "standard", ("standard", "at", "reverse_at", "rat")),
    "train.epsilon": _Key("float", 0.001),
    "train.epochs": _Key("int", 100),
    "train.batch_size": _Key("int", 128),
    "train.lr_init": _Key("float", 0.1),
    "train.momentum": _Key("float", 0.9),
    "train.warmup_epochs": _Key("int", 5),
    "train.schedule": _Key("str", "cosine", ("constant", "cosine")),
    "train.mixup_alpha": _Key("float", 0.0, help="Beta(alpha, alpha) mixup on the clean term; 0 disables"),
    "train.mixup_on_rat": _Key("bool", False),
    "train.temperature": _Key("float", 1.0),
    # evaluation split
    "split.val_fraction": _Key("float", 0.2),
    "split.seed": _Key("int", 0),
    # scoring / evaluation
    "eval.methods": _Key("str", "msr,rr_fast"),
    "eval.sweep": _Key("bool", True, help="tune T/eps per method on the validation split"),
    "eval.temperature": _Key("float", 1.0),
    "eval.preprocess_eps": _Key("float", 0.0),
    "eval.corrupt_kind": _Key("str", "none", ("none", "gaussian_noise", "uniform_noise", "blur_1d")),
    "eval.corrupt_severity": _Key("int", 0),
    "eval.corrupt_seed": _Key("int", 0),
    # radius estimation
    "radius.method": _Key("str", "rr_bs", ("rr_bs", "rr_fast", "oracle_line_search")),
    "radius.r_init": _Key("float", 1e-4),
    "radius.max_total_passes": _Key("int", 25),
    "radius.alpha": _Key("float", 0.01),
    "radius.temperature": _Key("float", 1.0),
    "radius.r_cap": _Key("float", 0.0, help="give-up radius; 0 means 2x the input-range width"),
    "radius.base_attack": _Key("str", "fgsm", ("fgsm", "pgd")),
    "radius.pgd_steps": _Key("int", 4),
    "radius.grid_points": _Key("int", 10000),
    "radius.refine": _Key("int", 2),
    # temperature sweep command
    "sweep.methods": _Key("str", "rr_bs,rr_fast,odin"),
    "sweep.t_grid": _Key("str", "", help="comma-separated temperatures; empty for the default grid"),
}

# The snapshot captures the experiment, not where its files land.
SNAPSHOT_EXCLUDE = ("out",)


def coerce(key: str, raw: str):
    """Parse a raw string value according to the schema; raise ConfigError."""
    spec = SCHEMA.get(key)
    if spec is None:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if spec.kind == "int":
            value = int(raw)
        elif spec.kind == "float":
            value = float(raw)
        elif spec.kind == "bool":
            if raw.lower() not in ("true", "false"):
                raise ValueError("expected true or false")
            value = raw.lower() == "true"
        else:
            value = raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    if spec.choices is not None and value not in spec.choices:
        raise ConfigError(f"{key} must be one of {spec.choices}, got {value!r}")
    return value


def defaults() -> dict:
    return {key: spec.default for key, spec in SCHEMA.items()}


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines into a typed partial config."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        out[key.strip()] = coerce(key.strip(), raw)
    return out


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_snapshot(cfg: dict, path) -> None:
    """Dump the fully resolved config, sorted, minus location-only keys."""
    lines = [
        f"{key} = {format_value(cfg[key])}"
        for key in sorted(SCHEMA)
        if key not in SNAPSHOT_EXCLUDE
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_float_list(raw: str, key: str) -> list[float]:
    if not raw.strip():
        return []
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad float list for {key}: {raw!r}") from exc


def parse_int_list(raw: str, key: str) -> list[int]:
    if not raw.strip():
        return []
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad int list for {key}: {raw!r}") from exc


def parse_str_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]
