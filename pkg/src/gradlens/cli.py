"""Command-line interface: train, sweep, simulate, and dataset management.

Values resolve in order: built-in defaults, then the config file given with
--config, then command-line flags. Every run writes a manifest with the
fully resolved configuration next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, pgg, plots
from .config import (
    OUTPUT_DIR_ENV,
    AppConfig,
    ConfigError,
    config_help,
    load_config,
    write_manifest,
)
from .data import (
    DataError,
    DatasetSchema,
    load_csv,
    load_registry,
    resolve_dataset,
    save_registry,
)
from .lens import init_params
from .optim import make_optimizer
from .stochastics import Rng, TargetNoiseSpec

log = logging.getLogger(__name__)


def _fmt(x: float) -> str:
    return f"{x:g}"


def _load_app_config(args) -> AppConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else AppConfig()
    for section, key, attr in getattr(args, "_overrides", []):
        cfg.set(section, key, getattr(args, attr, None))
    return cfg


def _check_p(p: float):
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p must be in the range [0, 1], got {_fmt(p)}")


def cmd_train(args) -> int:
    cfg = _load_app_config(args)
    p = cfg.get_float("train", "p")
    _check_p(p)
    noise = TargetNoiseSpec.parse(cfg.get("train", "target_noise"))
    dataset_name = cfg.get("train", "dataset")
    if not dataset_name:
        raise ConfigError("no dataset given (flag --dataset or [train] dataset)")

    registry_path = Path(cfg.get("run", "registry"))
    registry = load_registry(registry_path)
    path, schema = resolve_dataset(registry, dataset_name, registry_path)
    dataset = load_csv(path, schema)

    sweep_cfg = bench.SweepConfig(
        dataset=dataset_name,
        p_grid=(p,),
        target_noises=(noise,),
        epochs=cfg.get_int("train", "epochs"),
        batch_size=cfg.get_int("train", "batch_size"),
        optimizer=cfg.get("train", "optimizer"),
        learning_rate=cfg.get_float("train", "learning_rate"),
        split_fraction=cfg.get_float("train", "split_fraction"),
        hidden_layers=cfg.get_int("network", "hidden_layers"),
        hidden_width=cfg.get_int("network", "hidden_width"),
    )
    seed = cfg.get_int("run", "root_seed")
    train_ds, test_ds = bench.prepare_splits(dataset, sweep_cfg, seed)

    rng = Rng(seed)
    spec = bench.network_spec_for(train_ds, sweep_cfg)
    initial = [q.copy() for q in init_params(spec, rng.substream("init"))]
    optimizer = make_optimizer(sweep_cfg.optimizer, sweep_cfg.learning_rate)
    params, loss_history = bench.train(
        spec, train_ds, p, noise, optimizer,
        sweep_cfg.epochs, sweep_cfg.batch_size, rng,
    )
    clean = bench.evaluate_clean(spec, params, test_ds)

    out_dir = cfg.output_dir / f"train_{dataset_name}_p{_fmt(p)}_{noise.name}_seed{seed}"
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "loss.csv", "w", encoding="utf-8") as fh:
        fh.write(bench.LOSSES_HEADER + "\n")
        for epoch, loss in enumerate(loss_history):
            fh.write(f"{dataset_name},{seed},{_fmt(p)},{noise.name},{epoch},{loss!r}\n")
    with open(out_dir / "metrics.csv", "w", encoding="utf-8") as fh:
        fh.write("metric,value\n")
        for name in sorted(clean):
            fh.write(f"{name},{clean[name]!r}\n")
    write_manifest(out_dir / "manifest.txt", cfg, {"command": "train", "root_seed": seed})

    delta = max(
        max(np.abs(q.weights - q0.weights).max(), np.abs(q.bias - q0.bias).max())
        for q, q0 in zip(params, initial)
    )
    metric_text = " ".join(f"{k}={v:.6g}" for k, v in sorted(clean.items()))
    print(
        f"train {dataset_name} p={_fmt(p)} noise={noise.name} seed={seed} "
        f"final_loss={loss_history[-1]:.6g} {metric_text}"
    )
    if delta == 0.0:
        print("parameters unchanged from initialization")
    print(f"outputs written to {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_app_config(args)
    if getattr(args, "plots_flag", False):
        cfg.set("sweep", "plots", "true")
    dataset_name = cfg.get("sweep", "dataset")
    if not dataset_name:
        raise ConfigError("no dataset given (flag --dataset or [sweep] dataset)")
    for p in cfg.get_floats("sweep", "p_grid"):
        _check_p(p)

    sweep_cfg = bench.SweepConfig(
        dataset=dataset_name,
        p_grid=tuple(cfg.get_floats("sweep", "p_grid")),
        target_noises=tuple(
            TargetNoiseSpec.parse(s) for s in cfg.get_list("sweep", "target_noises")
        ),
        seeds=tuple(cfg.get_ints("sweep", "seeds")),
        amplitudes=tuple(cfg.get_floats("sweep", "amplitudes")),
        repetitions=cfg.get_int("sweep", "repetitions"),
        epochs=cfg.get_int("sweep", "epochs"),
        batch_size=cfg.get_int("sweep", "batch_size"),
        optimizer=cfg.get("sweep", "optimizer"),
        learning_rate=cfg.get_float("sweep", "learning_rate"),
        split_fraction=cfg.get_float("sweep", "split_fraction"),
        hidden_layers=cfg.get_int("network", "hidden_layers"),
        hidden_width=cfg.get_int("network", "hidden_width"),
    )
    registry_path = Path(cfg.get("run", "registry"))
    registry = load_registry(registry_path)

    out_dir = cfg.output_dir / f"sweep_{dataset_name}"
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir / "manifest.txt", cfg,
                   {"command": "sweep", "root_seed": cfg.get_int("run", "root_seed")})

    total = len(bench.cell_grid(sweep_cfg))
    done = {"count": 0}

    def progress(cell):
        done["count"] += 1
        print(
            f"cell {cell.index + 1}/{total}: p={_fmt(cell.p)} "
            f"noise={cell.noise.name} seed={cell.seed} done"
        )

    results = bench.run_sweep(
        sweep_cfg,
        registry,
        out_dir,
        registry_path=registry_path,
        jobs=args.jobs,
        resume=args.resume,
        progress=progress,
    )
    if cfg.get_bool("sweep", "plots"):
        for metric_name in {c.metric_name for r in results for c in r.curves}:
            plots.plot_metric_curves(
                results, metric_name, out_dir / "plots" / f"{metric_name}.svg",
                title=f"{dataset_name}: {metric_name} vs input noise",
            )
    print(
        f"sweep {dataset_name}: {done['count']} new cells, "
        f"{len(results)}/{total} completed; results in {out_dir}"
    )
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_app_config(args)
    modes = args.mode if args.mode else cfg.get_list("simulate", "modes")
    cfg.set("simulate", "modes", ",".join(modes))
    seed = cfg.get_int("run", "root_seed")
    out_dir = cfg.output_dir / "simulate"
    out_dir.mkdir(parents=True, exist_ok=True)

    traces = {}
    for mode in modes:
        game_cfg = pgg.GameConfig(
            num_players=cfg.get_int("simulate", "players"),
            benefit_factor=cfg.get_float("simulate", "kappa"),
            compose_cost=cfg.get_float("simulate", "cost"),
            exploration_temp=cfg.get_float("simulate", "tau"),
            mode=mode,
            active_prob=cfg.get_float("simulate", "pd"),
            update_prob=cfg.get_float("simulate", "p"),
            benefit_mode=cfg.get("simulate", "benefit_mode"),
            q_learning_rate=cfg.get_float("simulate", "q_learning_rate"),
            rounds=cfg.get_int("simulate", "rounds"),
            initial_compose_fraction=cfg.get_float("simulate", "init"),
            seed=seed,
        )
        trace = pgg.run(game_cfg)
        traces[mode] = trace
        with open(out_dir / f"trace_{mode}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["round", "composition_level", "mean_payoff"])
            for t in range(len(trace)):
                writer.writerow([t, repr(float(trace.composition[t])),
                                 repr(float(trace.mean_payoff[t]))])
        final = trace.composition[-100:].mean() if len(trace) else float("nan")
        print(f"simulate mode={mode}: rounds={len(trace)} final_composition={final:.4f}")
    plots.plot_traces(traces, out_dir / "composition.svg")
    write_manifest(out_dir / "manifest.txt", cfg,
                   {"command": "simulate", "root_seed": seed, "modes": ",".join(modes)})
    print(f"outputs written to {out_dir}")
    return 0


def cmd_datasets(args) -> int:
    cfg = _load_app_config(args)
    registry_path = Path(cfg.get("run", "registry"))
    registry = load_registry(registry_path)
    if args.datasets_cmd == "list":
        if not registry:
            print("no datasets registered")
            return 0
        for name in sorted(registry):
            entry = registry[name]
            cats = ",".join(entry.get("categorical", [])) or "-"
            print(f"{name}: task={entry['task']} target={entry['target']} "
                  f"categorical={cats} path={entry['path']}")
        return 0
    # add
    schema = DatasetSchema(
        target_column=args.target,
        task=args.task,
        categorical_columns=tuple(args.categorical.split(",")) if args.categorical else (),
    )
    dataset = load_csv(args.path, schema)  # validate before registering
    registry[args.name] = {
        "path": str(Path(args.path).resolve()),
        "target": args.target,
        "task": args.task,
        "categorical": list(schema.categorical_columns),
    }
    save_registry(registry_path, registry)
    print(
        f"registered {args.name}: {dataset.n} examples, {dataset.n_features} features "
        f"({dataset.task}) in {registry_path}"
    )
    return 0


def _add_common(parser, overrides):
    parser.add_argument("--config", help="path to a config file")
    parser.add_argument("--output-dir", help="output directory (overrides [run] output_dir)")
    parser.add_argument("--registry", help="dataset registry path (overrides [run] registry)")
    parser.add_argument("--seed", help="root seed (overrides [run] root_seed)")
    overrides += [
        ("run", "output_dir", "output_dir"),
        ("run", "registry", "registry"),
        ("run", "root_seed", "seed"),
    ]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradlens",
        description=(
            "Train feed-forward networks with backward-pass gradient dropout and "
            "target noising, benchmark their input-noise robustness, and run the "
            "compose/detour public goods game."
        ),
        epilog=config_help() + f"\n\nenvironment:\n  {OUTPUT_DIR_ENV}: overrides the output directory",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one (dataset, p, target-noise) cell")
    t_over: list = []
    _add_common(t, t_over)
    t.add_argument("--dataset", help="registered dataset name")
    t.add_argument("--p", help="gradient keep probability in [0, 1]")
    t.add_argument("--target-noise", dest="target_noise", help="target-noise strategy name")
    t.add_argument("--epochs", help="training epochs")
    t.add_argument("--batch-size", dest="batch_size", help="mini-batch size")
    t.add_argument("--optimizer", help="adam or sgd")
    t.add_argument("--learning-rate", dest="learning_rate", help="optimizer learning rate")
    t_over += [
        ("train", "dataset", "dataset"),
        ("train", "p", "p"),
        ("train", "target_noise", "target_noise"),
        ("train", "epochs", "epochs"),
        ("train", "batch_size", "batch_size"),
        ("train", "optimizer", "optimizer"),
        ("train", "learning_rate", "learning_rate"),
    ]
    t.set_defaults(func=cmd_train, _overrides=t_over)

    s = sub.add_parser("sweep", help="run the full robustness sweep for one dataset")
    s_over: list = []
    _add_common(s, s_over)
    s.add_argument("--dataset", help="registered dataset name")
    s.add_argument("--p-grid", dest="p_grid", help="comma-separated keep probabilities")
    s.add_argument("--target-noises", dest="target_noises",
                   help="comma-separated target-noise strategy names")
    s.add_argument("--seeds", help="comma-separated cell seeds")
    s.add_argument("--epochs", help="training epochs per cell")
    s.add_argument("--repetitions", help="noise repetitions per amplitude")
    s.add_argument("--plots", dest="plots_flag", action="store_true",
                   help="write an SVG plot per metric")
    s.add_argument("--resume", action="store_true",
                   help="skip cells whose outputs already exist")
    s.add_argument("--jobs", type=int, default=1, help="parallel cell workers (default 1)")
    s_over += [
        ("sweep", "dataset", "dataset"),
        ("sweep", "p_grid", "p_grid"),
        ("sweep", "target_noises", "target_noises"),
        ("sweep", "seeds", "seeds"),
        ("sweep", "epochs", "epochs"),
        ("sweep", "repetitions", "repetitions"),
    ]
    s.set_defaults(func=cmd_sweep, _overrides=s_over)

    m = sub.add_parser("simulate", help="run the compose/detour public goods game")
    m_over: list = []
    _add_common(m, m_over)
    m.add_argument("--mode", action="append",
                   help="simulation mode (repeatable): baseline, classical-dropout, "
                        "or gradient-dropout")
    m.add_argument("--players", help="number of agents")
    m.add_argument("--kappa", help="benefit factor")
    m.add_argument("--cost", help="compose cost")
    m.add_argument("--tau", help="softmax exploration temperature")
    m.add_argument("--p", help="gradient-dropout update probability")
    m.add_argument("--pd", help="classical-dropout keep-active probability")
    m.add_argument("--benefit-mode", dest="benefit_mode", help="shared or contingent")
    m.add_argument("--rounds", help="number of rounds")
    m.add_argument("--init", dest="init_fraction", help="initial compose fraction")
    m.add_argument("--lam", dest="q_learning_rate", help="action-value learning rate")
    m_over += [
        ("simulate", "players", "players"),
        ("simulate", "kappa", "kappa"),
        ("simulate", "cost", "cost"),
        ("simulate", "tau", "tau"),
        ("simulate", "p", "p"),
        ("simulate", "pd", "pd"),
        ("simulate", "benefit_mode", "benefit_mode"),
        ("simulate", "rounds", "rounds"),
        ("simulate", "init", "init_fraction"),
        ("simulate", "q_learning_rate", "q_learning_rate"),
    ]
    m.set_defaults(func=cmd_simulate, _overrides=m_over)

    d = sub.add_parser("datasets", help="manage the dataset registry")
    dsub = d.add_subparsers(dest="datasets_cmd", required=True)
    dl = dsub.add_parser("list", help="list registered datasets")
    dl_over: list = []
    _add_common(dl, dl_over)
    dl.set_defaults(func=cmd_datasets, _overrides=dl_over)
    da = dsub.add_parser("add", help="register a CSV dataset")
    da_over: list = []
    _add_common(da, da_over)
    da.add_argument("name", help="dataset name")
    da.add_argument("--path", required=True, help="path to the CSV file")
    da.add_argument("--target", required=True, help="target column name")
    da.add_argument("--task", required=True, choices=["regression", "classification"])
    da.add_argument("--categorical", help="comma-separated categorical feature columns")
    da.set_defaults(func=cmd_datasets, _overrides=da_over)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except bench.TrainingDiverged as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
