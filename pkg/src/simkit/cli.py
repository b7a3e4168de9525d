"""Command-line entry points.

Every pipeline stage is reachable from the shell: asset conversion, demo
collection, replay, augmentation, retargeting, benchmark splits, the
conservation probe, and the teleop server.  Config problems exit with 2,
runtime failures with 1.  Warnings go to stderr prefixed WARN:.
"""

from __future__ import annotations

import argparse
import os
import sys

from .assets import AssetError, export_urdf, load_asset
from .augment import (
    CAMERA_POSES,
    GROUND_MATERIALS,
    LIGHT_RIGS,
    TABLE_MATERIALS,
    WALL_MATERIALS,
    generate_augmented,
    split_pool,
)
from .backends import BACKENDS, conservation_probe, probe_to_csv
from .config import ConfigError, apply_overrides, load_scenario, validate
from .demos import NoScriptedPolicy, collect_demos
from .envs import replay_trajectory
from .retarget import NoConvergence, retarget_trajectory
from .state import (
    EntityState,
    TrajectoryFormatError,
    diff_states,
    load_trajectory,
    save_trajectory,
    single_env_state,
)


def warn(message: str) -> None:
    print(f"WARN: {message}", file=sys.stderr)


def _load_config(args):
    cfg = load_scenario(args.scenario)
    overrides = getattr(args, "override", None) or []
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    problems = validate(cfg)
    if problems:
        raise ConfigError("\n".join(f"{args.scenario}: {p}" for p in problems))
    return cfg


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help="scenario file (.scn)")
    p.add_argument(
        "--override",
        action="append",
        metavar="PATH=VALUE",
        help="override a config field by dotted path (repeatable)",
    )


def _add_backend_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--backend",
        choices=sorted(BACKENDS),
        default=None,
        help="simulation backend (default: SIMKIT_BACKEND or dyn)",
    )


def cmd_convert(args) -> int:
    asset = load_asset(args.input)
    for w in asset.warnings:
        warn(w)
    out = args.output
    if not out.endswith(".urdf"):
        raise AssetError(f"only URDF output is supported, got {out!r}")
    export_urdf(asset, out)
    print(f"wrote {out} ({len(asset.bodies)} bodies, {asset.dof_count} dofs)")
    return 0


def cmd_replay(args) -> int:
    cfg = _load_config(args)
    traj = load_trajectory(args.trajectory)
    result = replay_trajectory(cfg, traj, backend=args.backend)
    print(f"steps: {len(traj.actions)}")
    print(f"success: {result.success}")
    if traj.states:
        report = diff_states(traj.states[-1], result.states[-1])
        print(f"final-state divergence: {report.max_err:.3e}")
    return 0


def cmd_collect(args) -> int:
    cfg = _load_config(args)
    demos = collect_demos(cfg, args.count, args.seed, robot=args.robot)
    os.makedirs(args.out, exist_ok=True)
    for i, traj in enumerate(demos):
        path = os.path.join(args.out, f"demo_{i:04d}.rvt")
        save_trajectory(traj, path)
        print(f"{path}: {len(traj.actions)} steps")
    if len(demos) < args.count:
        warn(f"collected {len(demos)} of {args.count} requested demos")
    return 0 if demos else 1


def cmd_augment(args) -> int:
    cfg = _load_config(args)
    demos = [load_trajectory(p) for p in args.demos]
    out = generate_augmented(
        cfg,
        demos,
        count=args.count,
        seed=args.seed,
        level=args.level,
        split=args.split,
    )
    os.makedirs(args.out, exist_ok=True)
    for i, traj in enumerate(out):
        path = os.path.join(args.out, f"aug_{i:04d}.rvt")
        save_trajectory(traj, path)
        print(f"{path}: {len(traj.actions)} steps (source {traj.extras.get('source', '?')})")
    print(f"accepted {len(out)} of {args.count} attempts")
    return 0 if out else 1


def cmd_bench_split(args) -> int:
    pools = {
        "table-materials": TABLE_MATERIALS,
        "wall-materials": WALL_MATERIALS,
        "ground-materials": GROUND_MATERIALS,
        "camera-poses": CAMERA_POSES,
        "light-rigs": LIGHT_RIGS,
    }
    names = [args.pool] if args.pool else sorted(pools)
    for name in names:
        if name not in pools:
            raise ConfigError(f"unknown pool {name!r} (have {', '.join(sorted(pools))})")
        train, test = split_pool(pools[name])
        print(f"{name}: total {len(pools[name])} train {len(train)} test {len(test)}")
    return 0


def cmd_retarget(args) -> int:
    cfg = _load_config(args)
    traj = load_trajectory(args.trajectory)
    dst_cfg_raw = load_scenario(args.dst_scenario)
    problems = validate(dst_cfg_raw)
    if problems:
        raise ConfigError("\n".join(f"{args.dst_scenario}: {p}" for p in problems))
    if args.robot is not None:
        dst_robot = next((r for r in dst_cfg_raw.robots if r.name == args.robot), None)
        if dst_robot is None:
            raise ConfigError(f"no robot named {args.robot!r} in {args.dst_scenario}")
    else:
        if not dst_cfg_raw.robots:
            raise ConfigError(f"{args.dst_scenario} has no robots")
        dst_robot = dst_cfg_raw.robots[0]
    out_traj, out_cfg = retarget_trajectory(cfg, traj, dst_robot)
    save_trajectory(out_traj, args.out)
    print(f"wrote {args.out} ({len(out_traj.actions)} steps, robot {dst_robot.name})")
    if args.check:
        result = replay_trajectory(out_cfg, out_traj, backend="kin")
        print(f"replay success: {result.success}")
        return 0 if result.success else 1
    return 0


def _parse_kick(specs, what: str) -> dict[str, tuple[float, float, float]]:
    out = {}
    for spec in specs or []:
        name, eq, rest = spec.partition("=")
        parts = rest.split(",")
        if not eq or len(parts) != 3:
            raise ConfigError(f"bad --{what} {spec!r}, expected NAME=X,Y,Z")
        try:
            out[name] = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"bad --{what} {spec!r}, expected NAME=X,Y,Z") from None
    return out


def cmd_probe_conservation(args) -> int:
    cfg = _load_config(args)
    vels = _parse_kick(args.vel, "vel")
    spins = _parse_kick(args.spin, "spin")
    init = None
    if vels or spins:
        entities = {
            name: EntityState(lin_vel=vels.get(name), ang_vel=spins.get(name))
            for name in set(vels) | set(spins)
        }
        init = single_env_state(entities)
    samples = conservation_probe(
        cfg, steps=args.steps, backend=args.backend or "dyn", init_state=init
    )
    if args.csv:
        with open(args.csv, "w") as f:
            f.write(probe_to_csv(samples))
        print(f"wrote {args.csv}")
    first, last = samples[0], samples[-1]

    def drift(a, b):
        num = max(abs(x - y) for x, y in zip(a, b))
        den = max(max(abs(x) for x in a), 1e-12)
        return num / den

    print(f"steps: {len(samples) - 1}")
    print(f"linear momentum rel drift: {drift(first.lin_mom, last.lin_mom):.3e}")
    print(f"angular momentum rel drift: {drift(first.ang_mom, last.ang_mom):.3e}")
    print(
        "kinetic energy rel drift: "
        f"{abs(last.kinetic - first.kinetic) / max(abs(first.kinetic), 1e-12):.3e}"
    )
    return 0


def cmd_teleop_serve(args) -> int:
    from .teleop import TeleopServer

    cfg = _load_config(args)
    server = TeleopServer(cfg, port=args.port, robot=args.robot, static_dir=args.static)
    print(f"teleop server on ws://0.0.0.0:{args.port}/teleop")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        if args.record:
            os.makedirs(args.record, exist_ok=True)
            for token, session in server.sessions.items():
                if session.actions:
                    path = os.path.join(args.record, f"teleop_{token}.rvt")
                    save_trajectory(session.finalize(), path)
                    print(f"saved {path}")
        server.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simkit", description="desk-scale robot simulation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert an asset file to URDF")
    p.add_argument("input", help="source asset (.urdf, .xml, .mjcf)")
    p.add_argument("output", help="destination .urdf")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("replay", help="replay a recorded trajectory")
    _add_scenario_args(p)
    p.add_argument("trajectory", help="trajectory file (.rvt)")
    _add_backend_arg(p)
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("collect", help="record scripted demos over random layouts")
    _add_scenario_args(p)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--robot", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_collect)

    p = sub.add_parser("augment", help="generate validated augmented episodes")
    _add_scenario_args(p)
    p.add_argument("demos", nargs="+", help="source trajectory files")
    p.add_argument("--count", type=int, default=10, help="attempts to run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=int, default=0, choices=(0, 1, 2, 3))
    p.add_argument("--split", default="train", choices=("train", "test"))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("bench-split", help="show randomization pool splits")
    p.add_argument("--pool", default=None, help="limit to one pool")
    p.set_defaults(fn=cmd_bench_split)

    p = sub.add_parser("retarget", help="map a demo onto a different robot")
    _add_scenario_args(p)
    p.add_argument("trajectory", help="source trajectory (.rvt)")
    p.add_argument("dst_scenario", help="scenario containing the destination robot")
    p.add_argument("--robot", default=None, help="destination robot name")
    p.add_argument("--out", required=True, help="output trajectory file")
    p.add_argument("--check", action="store_true", help="replay the result and report success")
    p.set_defaults(fn=cmd_retarget)

    p = sub.add_parser("probe-conservation", help="track momentum and energy drift")
    _add_scenario_args(p)
    p.add_argument("--steps", type=int, default=1000)
    _add_backend_arg(p)
    p.add_argument("--csv", default=None, help="write per-step totals to a CSV file")
    p.add_argument(
        "--vel",
        action="append",
        metavar="NAME=X,Y,Z",
        help="initial linear velocity for an entity (repeatable)",
    )
    p.add_argument(
        "--spin",
        action="append",
        metavar="NAME=X,Y,Z",
        help="initial angular velocity for an entity (repeatable)",
    )
    p.set_defaults(fn=cmd_probe_conservation)

    p = sub.add_parser("teleop-serve", help="serve the teleop websocket endpoint")
    _add_scenario_args(p)
    p.add_argument("--port", type=int, default=8571)
    p.add_argument("--robot", default=None)
    p.add_argument("--static", default=None, help="directory of web client files to serve")
    p.add_argument("--record", default=None, help="directory for saved teleop demos")
    p.set_defaults(fn=cmd_teleop_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        AssetError,
        TrajectoryFormatError,
        NoConvergence,
        NoScriptedPolicy,
        OSError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
