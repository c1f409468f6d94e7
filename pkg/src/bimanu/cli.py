"""Command-line entry points for the full pipeline.

Subcommands: demo, record, train, eval, ablate, serve, deploy.
Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
Config precedence: CLI flag > JSON config file (--config) > built-in
default. All randomness in a subcommand flows from the single --seed.
CSV and JSON outputs are written atomically (temp file + rename).

CSV schemas:
  loss curve:  step,loss
  ablation:    sweep,variant,train_episodes,steps,action_mse
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit code 1."""

    def error(self, message):
        raise UsageError(message)


TASKS = ("handover", "handover_slip", "stack")


def _write_csv_atomic(path, header: list[str], rows: list[tuple]) -> None:
    path = str(path)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def _parse_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise UsageError(f"--bind must be HOST:PORT, got {bind!r}")
    return host, int(port)


def _load_data(data_dir, which: str):
    """(episodes, names) for one side of the split; data problems are exit
    code 2."""
    from .data.dataset import load_episodes, load_split
    from .data.episode import EpisodeFormatError

    try:
        split = load_split(data_dir)
        names = split[which]
        if not names:
            raise DataError(f"split has no {which} episodes")
        return load_episodes(data_dir, names), names
    except (FileNotFoundError, json.JSONDecodeError, EpisodeFormatError, ValueError) as e:
        raise DataError(f"cannot load {which} split from {data_dir}: {e}") from e


def _load_checkpoint(path):
    from .policy.checkpoint import load_checkpoint

    try:
        return load_checkpoint(path)
    except (FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as e:
        raise DataError(f"cannot load checkpoint {path}: {e}") from e


def _policy_config(args):
    from .policy.policy import CAMERA_ORDER, PolicyConfig

    cameras = () if args.no_vision else tuple(
        CAMERA_ORDER if args.cameras == "all" else args.cameras.split(",")
    )
    for c in cameras:
        if c not in CAMERA_ORDER:
            raise UsageError(f"unknown camera {c!r}; choose from {CAMERA_ORDER}")
    return PolicyConfig(
        cameras=cameras, use_touch=not args.no_touch, use_depth=args.use_depth
    )


# -- subcommands -----------------------------------------------------------


def cmd_demo(args) -> int:
    from .data.dataset import default_split, write_split
    from .data.episode import write_episode
    from .sim.render import default_cameras
    from .sim.scripted import scripted_demo
    from .sim.tasks import make_task

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = make_task(args.task)
    cameras = default_cameras(args.height, args.width)
    failures = 0
    for i in range(args.episodes):
        seed = args.seed + i
        ep, _world = scripted_demo(
            spec, seed, cameras=cameras, with_depth=not args.no_depth
        )
        name = f"{args.task}_{seed:04d}.bmep"
        write_episode(ep, out / name)
        print(f"{name}: frames={len(ep.frames)} success={ep.success}")
        if not ep.success:
            failures += 1
    names = sorted(p.name for p in out.glob("*.bmep"))
    train, test = default_split(names)
    write_split(out, train, test)
    print(f"split.json: {len(train)} train / {len(test)} test")
    if failures:
        print(f"error: {failures} demonstration(s) failed", file=sys.stderr)
        return 3
    return 0


def cmd_record(args) -> int:
    from .record import RecordServer, TeleopRecorder
    from .sim.render import default_cameras
    from .sim.tasks import make_task

    host, port = _parse_bind(args.bind)
    recorder = TeleopRecorder(
        make_task(args.task),
        seed=args.seed,
        out_dir=args.out,
        cameras=default_cameras(args.height, args.width),
        with_depth=not args.no_depth,
    )
    server = RecordServer(recorder, host=host, port=port)

    async def run():
        ready = asyncio.Event()
        task = asyncio.create_task(server.serve_forever(ready))
        await ready.wait()
        print(f"record server listening on ws://{host}:{port}", flush=True)
        await task

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_train(args) -> int:
    import torch

    from .data.dataset import STATS_FILE, write_json_atomic
    from .data.stats import fit_stats
    from .policy.checkpoint import save_checkpoint
    from .policy.policy import DiffusionPolicy
    from .policy.training import TrainConfig, Trainer

    episodes, names = _load_data(args.data, "train")
    stats = fit_stats(episodes)
    write_json_atomic(Path(args.data) / STATS_FILE, stats.to_dict())

    torch.manual_seed(args.seed)
    policy = DiffusionPolicy(_policy_config(args), stats)
    cfg = TrainConfig(
        lr=args.lr,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        ema_decay=args.ema_decay,
        steps=args.steps,
        seed=args.seed,
    )
    dtype = torch.float64 if args.precision == "f64" else torch.float32
    trainer = Trainer(policy, episodes, cfg, dtype=dtype)
    state_path = Path(args.state) if args.state else Path(str(args.out) + ".state.pt")
    if args.resume:
        if not state_path.exists():
            raise DataError(f"no training state at {state_path}")
        trainer.load_state(state_path)
        print(f"resumed at step {trainer.step} from {state_path}")

    def progress(step, loss):
        print(f"step {step}: loss {loss:.5f}", flush=True)

    curve = trainer.run(cfg.steps, log_every=args.log_every, progress=progress)
    trainer.save_state(state_path)
    ema_policy = trainer.ema.apply_clone(policy.float() if dtype == torch.float64 else policy)
    save_checkpoint(ema_policy, args.out, extra={"train_steps_done": trainer.step})
    loss_csv = args.loss_csv or str(args.out) + ".loss.csv"
    _write_csv_atomic(loss_csv, ["step", "loss"], curve)
    print(f"checkpoint: {args.out}")
    print(f"loss curve: {loss_csv}")
    return 0


def cmd_eval(args) -> int:
    from .data.dataset import write_json_atomic
    from .data.metrics import action_mse, mask_modality
    from .policy.training import make_predictor

    policy = _load_checkpoint(args.checkpoint)
    episodes, names = _load_data(args.data, args.split)
    base = make_predictor(policy, seed=args.seed)
    drop = set(args.drop.split(",")) - {""}
    known = {"vision", "touch", "depth", "wrist_cams", "third_cam"}
    if drop - known:
        raise UsageError(f"unknown --drop names {sorted(drop - known)}; choose from {sorted(known)}")
    # dropped channels are encoder-absent, not zero-filled, so the checkpoint
    # must have been trained without them
    if "touch" in drop and policy.cfg.use_touch:
        raise DataError("--drop touch needs a checkpoint trained with --no-touch")
    if "vision" in drop and policy.cfg.cameras:
        raise DataError("--drop vision needs a checkpoint trained with --no-vision")
    predictor = (lambda obs: base(mask_modality(obs, drop))) if drop else base
    mse = action_mse(predictor, episodes, policy.stats, stride=args.stride)
    print(f"action_mse={mse:.6f} split={args.split} episodes={len(episodes)}")
    if args.out:
        write_json_atomic(
            args.out,
            {
                "action_mse": mse,
                "split": args.split,
                "episodes": names,
                "stride": args.stride,
                "seed": args.seed,
            },
        )
    return 0


def cmd_ablate(args) -> int:
    import torch

    from .data.metrics import action_mse
    from .data.stats import fit_stats
    from .policy.policy import CAMERA_ORDER, DiffusionPolicy, PolicyConfig
    from .policy.training import TrainConfig, Trainer, make_predictor

    train_eps, _ = _load_data(args.data, "train")
    test_eps, _ = _load_data(args.data, "test")
    sizes = [int(s) for s in args.sizes.split(",")]
    variants = args.modalities.split(",")
    known = {"full", "no_vision", "no_touch"}
    unknown = set(variants) - known
    if unknown:
        raise UsageError(f"unknown modality variants {sorted(unknown)}; choose from {sorted(known)}")

    def run_one(episodes, cameras, use_touch):
        stats = fit_stats(episodes)
        torch.manual_seed(args.seed)
        policy = DiffusionPolicy(
            PolicyConfig(cameras=cameras, use_touch=use_touch), stats
        )
        cfg = TrainConfig(steps=args.steps, batch_size=args.batch_size, seed=args.seed)
        trainer = Trainer(policy, episodes, cfg)
        trainer.run(cfg.steps, log_every=max(args.steps // 4, 1))
        ema = trainer.ema.apply_clone(policy)
        return action_mse(
            make_predictor(ema, seed=args.seed), test_eps, stats, stride=args.stride
        )

    rows = []
    for size in sizes:
        if size > len(train_eps):
            raise DataError(f"size sweep needs {size} train episodes, have {len(train_eps)}")
        mse = run_one(train_eps[:size], CAMERA_ORDER, True)
        rows.append(("size", "full", size, args.steps, mse))
        print(f"size={size}: action_mse={mse:.6f}", flush=True)
    for variant in variants:
        cameras = () if variant == "no_vision" else CAMERA_ORDER
        use_touch = variant != "no_touch"
        mse = run_one(train_eps, cameras, use_touch)
        rows.append(("modality", variant, len(train_eps), args.steps, mse))
        print(f"modality={variant}: action_mse={mse:.6f}", flush=True)
    _write_csv_atomic(
        args.out, ["sweep", "variant", "train_episodes", "steps", "action_mse"], rows
    )
    print(f"ablation table: {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .policy.training import make_predictor
    from .serve.server import InferenceServer

    policy = _load_checkpoint(args.checkpoint)
    host, port = _parse_bind(args.bind)
    predictor = make_predictor(policy, seed=args.seed)
    print(f"inference server listening on ws://{host}:{port}", flush=True)
    try:
        InferenceServer(predictor, host=host, port=port).run()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_deploy(args) -> int:
    from .data.stats import DatasetStats
    from .serve.client import run_remote_episode
    from .sim.tasks import make_task

    if args.stats:
        try:
            stats = DatasetStats.load(args.stats)
        except (FileNotFoundError, json.JSONDecodeError, KeyError) as e:
            raise DataError(f"cannot load stats {args.stats}: {e}") from e
    elif args.checkpoint:
        stats = _load_checkpoint(args.checkpoint).stats
    else:
        raise UsageError("deploy needs --stats or --checkpoint for denormalization")
    spec = make_task(args.task)
    successes = 0
    for i in range(args.episodes):
        seed = args.seed + i
        ok, ticks = asyncio.run(
            run_remote_episode(
                args.connect,
                spec,
                seed,
                stats,
                tick_period=args.tick_period,
                inject_latency_ticks=args.latency_inject,
            )
        )
        successes += ok
        print(f"episode seed={seed}: success={ok} ticks={ticks}", flush=True)
    print(f"success {successes}/{args.episodes}")
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    p = _Parser(prog="bimanu", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON config file; CLI flags override it")
    p.add_argument("--seed", type=int, default=0, help="root seed for the subcommand")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    subs: dict[str, _Parser] = {}

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        subs[name] = sp
        return sp

    sp = add("demo", cmd_demo, "generate scripted demonstration episodes")
    sp.add_argument("--task", choices=TASKS, default="handover")
    sp.add_argument("--episodes", type=int, default=1)
    sp.add_argument("--out", required=True, help="dataset directory")
    sp.add_argument("--height", type=int, default=24)
    sp.add_argument("--width", type=int, default=32)
    sp.add_argument("--no-depth", action="store_true")

    sp = add("record", cmd_record, "teleop recording server for the console")
    sp.add_argument("--task", choices=TASKS, default="handover")
    sp.add_argument("--out", default="recordings")
    sp.add_argument("--bind", default="127.0.0.1:8766")
    sp.add_argument("--height", type=int, default=24)
    sp.add_argument("--width", type=int, default=32)
    sp.add_argument("--no-depth", action="store_true")
    sp.add_argument(
        "--lockstep",
        action="store_true",
        help="one sim tick per controller message (always on; kept explicit)",
    )

    sp = add("train", cmd_train, "fit stats and train the diffusion policy")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--batch-size", type=int, default=128)
    sp.add_argument("--lr", type=float, default=1e-4)
    sp.add_argument("--weight-decay", type=float, default=1e-5)
    sp.add_argument("--ema-decay", type=float, default=0.999)
    sp.add_argument("--log-every", type=int, default=50)
    sp.add_argument("--loss-csv", help="default: <out>.loss.csv")
    sp.add_argument("--state", help="training state path (default <out>.state.pt)")
    sp.add_argument("--resume", action="store_true")
    sp.add_argument("--precision", choices=("f32", "f64"), default="f32")
    sp.add_argument("--no-vision", action="store_true")
    sp.add_argument("--no-touch", action="store_true")
    sp.add_argument("--use-depth", action="store_true")
    sp.add_argument("--cameras", default="all", help="comma list or 'all'")

    sp = add("eval", cmd_eval, "ActionMSE of a checkpoint on a split")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--split", choices=("train", "test"), default="test")
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--drop", default="", help="comma list: vision,touch,depth,...")
    sp.add_argument("--out", help="write results JSON here")

    sp = add("ablate", cmd_ablate, "dataset-size and modality sweeps")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True, help="ablation CSV path")
    sp.add_argument("--sizes", default="5,10,20,40")
    sp.add_argument("--modalities", default="full,no_vision,no_touch")
    sp.add_argument("--steps", type=int, default=300)
    sp.add_argument("--batch-size", type=int, default=64)
    sp.add_argument("--stride", type=int, default=4)

    sp = add("serve", cmd_serve, "asynchronous inference server")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--bind", default="127.0.0.1:8765")

    sp = add("deploy", cmd_deploy, "run deployment episodes against a server")
    sp.add_argument("--connect", required=True, help="ws://HOST:PORT")
    sp.add_argument("--task", choices=TASKS, default="handover")
    sp.add_argument("--episodes", type=int, default=10)
    sp.add_argument("--latency-inject", type=int, default=0, help="extra ticks of chunk delay")
    sp.add_argument("--stats", help="stats JSON for denormalization")
    sp.add_argument("--checkpoint", help="alternative stats source")
    sp.add_argument("--tick-period", type=float, default=0.1)

    return p, subs


def _apply_config_file(parser, subs, argv):
    """Config-file values become parser defaults so explicit CLI flags win."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    ns, _ = pre.parse_known_args(argv)
    if not ns.config:
        return
    try:
        cfg = json.loads(Path(ns.config).read_text())
    except (FileNotFoundError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read config {ns.config}: {e}") from e
    if not isinstance(cfg, dict):
        raise DataError(f"config {ns.config} must be a JSON object")
    globals_ = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    parser.set_defaults(**globals_)
    for name, sp in subs.items():
        section = cfg.get(name)
        merged = dict(globals_)
        if isinstance(section, dict):
            merged.update(section)
        known = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in merged.items() if k in known})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config_file(parser, subs, argv)
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return 1
        np.random.seed(args.seed % (2**32))
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 3
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
