#!/usr/bin/env python3
"""Deploy a trained checkpoint in the deterministic loopback harness over a
seed sweep and report the success rate plus action smoothness.

Usage: deploy_loopback.py CKPT [--task handover] [--seeds 100..110]
       [--latency 0] [--no-ensemble]
"""

import argparse

from bimanu.policy.checkpoint import load_checkpoint
from bimanu.serve.harness import mean_action_jump, run_deployment
from bimanu.sim.tasks import make_task


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("checkpoint")
    p.add_argument("--task", default="handover")
    p.add_argument("--seeds", default="100..110", help="START..END (end exclusive)")
    p.add_argument("--latency", type=int, default=0)
    p.add_argument("--no-ensemble", action="store_true")
    args = p.parse_args()

    start, end = (int(s) for s in args.seeds.split(".."))
    policy = load_checkpoint(args.checkpoint)
    spec = make_task(args.task)
    wins = 0
    for seed in range(start, end):
        ok, _harness, trace = run_deployment(
            policy,
            spec,
            seed,
            latency_ticks=args.latency,
            ensemble=not args.no_ensemble,
        )
        wins += ok
        print(
            f"seed {seed}: success={ok} ticks={len(trace)} "
            f"jump={mean_action_jump(trace):.4f}",
            flush=True,
        )
    print(f"success {wins}/{end - start}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
