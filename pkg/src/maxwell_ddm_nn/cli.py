"""Command-line front end.

Every subcommand reads an optional ``--config`` file (see ``configs/``)
and writes under the output directory: ``--out`` beats the
``MAXWELL_DDM_NN_OUT`` environment variable, which beats ``[output] dir``.
Failures print one ``error: <kind>: <message>`` line to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import InvalidArgumentError
from .config import OUTPUT_ENV, RunConfig, load_config
from .ddm import DDMSolver, interface_jump
from .export import export_field
from .geometry import build_mesh, describe, partition_two
from .nedelec import distribute_dofs
from .neural import Activation, NetworkShape, init_weights, load_model, save_model, train
from .pipeline import (
    Dataset,
    compare,
    default_catalog,
    generate_dataset,
    nn_solve,
    relative_l2,
)
from .system import solve_monolithic

COMMANDS = ("mesh-info", "solve", "ddm", "gen-data", "train", "nn-solve", "compare", "export")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maxwell-ddm-nn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI run configuration")
        s.add_argument("--out", help="output directory")
        if name in ("mesh-info",):
            s.add_argument("--n", type=int)
        if name in ("ddm", "export"):
            s.add_argument("--steps", type=int)
        if name == "export":
            s.add_argument("--grid", type=int)
        if name == "train":
            s.add_argument("--net", choices=("u01", "u10", "both"), default="both")
            s.add_argument("--lr", type=float, help="single-stage learning rate (overrides schedule)")
            s.add_argument("--activation", help="comma-separated list, e.g. sigmoid,relu")
        if name in ("nn-solve", "compare"):
            s.add_argument("--activation")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    out = args.out or os.environ.get(OUTPUT_ENV) or cfg.dir
    cfg = cfg.replace(dir=out)
    if getattr(args, "n", None):
        cfg = cfg.replace(n=args.n)
    if getattr(args, "steps", None):
        cfg = cfg.replace(steps=args.steps)
    if getattr(args, "grid", None):
        cfg = cfg.replace(sample_grid=args.grid)
    return cfg


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _model_name(net: str, activation: str) -> str:
    return net if activation == "sigmoid" else f"{net}_{activation}"


def _solver(cfg: RunConfig) -> DDMSolver:
    return DDMSolver(partition_two(build_mesh(cfg.n)), cfg.order, cfg.params)


def cmd_mesh_info(cfg, args):
    mesh = build_mesh(cfg.n)
    subs = partition_two(mesh) if cfg.n % 2 == 0 else ()
    print(describe(mesh, subs))


def cmd_solve(cfg, args):
    mesh = build_mesh(cfg.n)
    bc = default_catalog().by_id(cfg.field)
    E = solve_monolithic(mesh, cfg.order, cfg.params, bc)
    dms = [distribute_dofs(s, cfg.order) for s in partition_two(mesh)]
    for p in export_field(*(E.restrict(d) for d in dms), cfg.sample_grid, cfg.dir, "monolithic"):
        print(p)


def cmd_ddm(cfg, args):
    solver = _solver(cfg)
    hist = solver.run(default_catalog().by_id(cfg.field), cfg.steps)
    path = os.path.join(cfg.dir, "ddm_history.csv")
    _write(path, hist.to_csv())
    print(path)
    for p in export_field(*hist.solutions[-1], cfg.sample_grid, cfg.dir, f"ddm_step{cfg.steps}"):
        print(p)


def _data_path(cfg, direction, split):
    return os.path.join(cfg.dir, f"data_{direction}_{split}.csv")


def cmd_gen_data(cfg, args):
    sets = generate_dataset(default_catalog(), cfg.params, cfg.order, cfg.n)
    for d, pair in sets.items():
        for ds in pair:
            path = _data_path(cfg, d, ds.split)
            _write(path, ds.header_comment() + "\n" + ds.to_csv())
            print(f"{path} rows={len(ds)}")


def _read_dataset(cfg, direction, split) -> Dataset:
    path = _data_path(cfg, direction, split)
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path} missing; run gen-data first")
    with open(path) as fh:
        text = "".join(line for line in fh if not line.startswith("#"))
    return Dataset.from_csv(text, direction, split)


def cmd_train(cfg, args):
    nets = ("u01", "u10") if args.net == "both" else (args.net,)
    acts = (args.activation or cfg.activation).split(",")
    schedule = ((args.lr, cfg.max_iter),) if args.lr else cfg.schedule
    tc = cfg.train_config(schedule)
    summary = []
    for net_name in nets:
        d = net_name[1:]
        tr, te = _read_dataset(cfg, d, "train"), _read_dataset(cfg, d, "test")
        for act in acts:
            shape = NetworkShape(16, cfg.hidden, 8, Activation(act.strip()))
            net = init_weights(shape, cfg.seed)
            rep = train(net, (tr.inputs, tr.targets), (te.inputs, te.targets), tc)
            name = _model_name(net_name, shape.activation.value)
            save_model(net, os.path.join(cfg.dir, f"{name}.model"))
            _write(os.path.join(cfg.dir, f"{name}_loss.csv"), rep.to_csv())
            best = int(np.argmin(rep.test_loss))
            line = (f"{name}: iterations={rep.iterations} train_loss={rep.train_loss[-1]:.6e} "
                    f"test_loss={rep.test_loss[-1]:.6e} min_test_loss={rep.test_loss[best]:.6e}@{best} "
                    f"test_rises_after_min={rep.test_loss[-1] > rep.test_loss[best]} "
                    f"wall_time={rep.wall_time:.1f}s")
            summary.append(line)
            print(line)
    if len(acts) > 1:
        _write(os.path.join(cfg.dir, "activation_report.txt"), "\n".join(summary) + "\n")


def _nets(cfg, args):
    act = getattr(args, "activation", None) or cfg.activation
    return [load_model(os.path.join(cfg.dir, f"{_model_name(n, act)}.model")) for n in ("u01", "u10")]


def _nn_and_ddm(cfg, args):
    solver = _solver(cfg)
    bc = default_catalog().by_id(cfg.field)
    net01, net10 = _nets(cfg, args)
    nn = nn_solve(cfg.params, bc, net01, net10, cfg.order, solver=solver)
    ddm = solver.run(bc, cfg.steps).solutions[-1]
    return nn, ddm


def _report(cfg, nn, ddm) -> list[str]:
    rep = compare(ddm, nn, cfg.sample_grid)
    return [f"omega = {cfg.params.omega:.17g}", f"rel_l2_quadrature = {relative_l2(ddm, nn):.6e}",
            f"jump_nn = {interface_jump(*nn):.6e}", f"jump_ddm = {interface_jump(*ddm):.6e}"] + rep.lines()


def cmd_nn_solve(cfg, args):
    nn, ddm = _nn_and_ddm(cfg, args)
    tag = f"wl{cfg.wavelength:g}"
    for p in export_field(*nn, cfg.sample_grid, cfg.dir, f"nn_{tag}"):
        print(p)
    path = os.path.join(cfg.dir, f"nn_report_{tag}.txt")
    _write(path, "\n".join(_report(cfg, nn, ddm)) + "\n")
    print(path)


def cmd_compare(cfg, args):
    nn, ddm = _nn_and_ddm(cfg, args)
    print("\n".join(_report(cfg, nn, ddm)))


def cmd_export(cfg, args):
    hist = _solver(cfg).run(default_catalog().by_id(cfg.field), cfg.steps)
    for p in export_field(*hist.solutions[-1], cfg.sample_grid, cfg.dir, f"ddm_step{cfg.steps}"):
        print(p)


HANDLERS = {
    "mesh-info": cmd_mesh_info,
    "solve": cmd_solve,
    "ddm": cmd_ddm,
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "nn-solve": cmd_nn_solve,
    "compare": cmd_compare,
    "export": cmd_export,
}


def dispatch(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"missing subcommand (one of {', '.join(COMMANDS)})")
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = _config(args)
        os.makedirs(cfg.dir, exist_ok=True)
        HANDLERS[args.command](cfg, args)
    except (InvalidArgumentError, KeyError) as exc:
        print(f"error: invalid-argument: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
