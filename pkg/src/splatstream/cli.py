"""Command-line entry points: run | bench | serve | metrics."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .config import Config, ConfigError
from .dataset import DatasetError, load_dataset, load_pose_file
from .frames import FrameBuffer
from .metrics import format_metric_table, psnr, stream_psnr
from .camera import pose_error_metrics
from .scheduler import PipelineConfig, format_latency_report, latency_report, run_pipeline
from .stages import (INTER_IMPLS, SPATIAL_IMPLS, SR_IMPLS, SyntheticOracleStage, make_stage)
from .synthetic import CameraRingSpec, SyntheticSceneGenerator, SyntheticSceneSpec


def synthetic_spec_from_yaml(path) -> SyntheticSceneSpec:
    with open(path) as f:
        doc = yaml.safe_load(f) or {}
    ring = CameraRingSpec(**doc.pop("ring", {}))
    return SyntheticSceneSpec(ring=ring, **doc)


def _parse_views(raw):
    if raw is None:
        return None
    return [int(v) for v in raw.split(",") if v != ""]


def _make_stages(cfg: Config, generator=None):
    spatial_impl = cfg.get("stages.spatial.impl")
    if spatial_impl == "oracle":
        if generator is None:
            raise ConfigError("stages.spatial.impl=oracle requires a synthetic input")
        spatial = SyntheticOracleStage(generator.scene_at)
    elif spatial_impl == "external":
        spatial = make_stage(SPATIAL_IMPLS, "external",
                             host=cfg.get("stages.spatial.host"),
                             port=int(cfg.get("stages.spatial.port")))
    else:
        spatial = make_stage(SPATIAL_IMPLS, spatial_impl,
                             depth=float(cfg.get("stages.spatial.depth", 5.0)))
    inter_impl = cfg.get("stages.inter.impl")
    if inter_impl == "external":
        inter = make_stage(INTER_IMPLS, "external", host=cfg.get("stages.inter.host"),
                           port=int(cfg.get("stages.inter.port")))
    else:
        inter = make_stage(INTER_IMPLS, inter_impl)
    sr_impl = cfg.get("stages.sr.impl")
    if sr_impl == "external":
        sr = make_stage(SR_IMPLS, "external", host=cfg.get("stages.sr.host"),
                        port=int(cfg.get("stages.sr.port")))
    else:
        sr = make_stage(SR_IMPLS, sr_impl)
    return spatial, inter, sr


def _load_input(args, cfg: Config, width: int, height: int):
    """Resolve --input into (source, rig, targets, generator, lossy)."""
    path = Path(args.input)
    views = _parse_views(getattr(args, "views", None))
    if path.is_file():  # synthetic scene spec
        spec = synthetic_spec_from_yaml(path)
        gen = SyntheticSceneGenerator(spec)
        cams = gen.cameras(width, height)
        idx = views if views is not None else list(range(min(2, len(cams))))
        rig = [cams[i] for i in idx]
        targets = [cams[len(cams) // 2]]
        source = gen.frame_source(rig, width, height)
        return source, rig, targets, gen, False
    ds = load_dataset(path, views=views, prefetch=4)
    if ds.poses is None:
        raise DatasetError(f"{path}: poses.yaml required for dataset input "
                           "(poses.source=file)")
    rig = [p.camera(ds.width, ds.height) for p in ds.poses]
    if getattr(args, "target", None):
        targets = [p.camera(ds.width, ds.height) for p in load_pose_file(args.target)]
    elif ds.target_poses:
        targets = [p.camera(ds.width, ds.height) for p in ds.target_poses]
    else:
        targets = [rig[0]]
    return iter(ds), rig, targets, None, ds.lossy


def cmd_run(args) -> int:
    cfg = Config.load(args.config) if args.config else Config()
    cfg.apply_overrides({
        "pipeline.resolution": args.res,
        "input.fps": args.fps,
    })
    width, height = cfg.resolution()
    source, rig, targets, gen, lossy = _load_input(args, cfg, width, height)
    spatial, inter, sr = _make_stages(cfg, gen)
    pcfg = PipelineConfig(
        input_fps=float(cfg.get("input.fps")),
        trailing_mode=cfg.get("pipeline.trailing"),
        drop_on_lag=bool(cfg.get("pipeline.drop_on_lag")),
        prefetch_spatial=bool(cfg.get("pipeline.prefetch_spatial")),
    )
    result = run_pipeline(source, rig, targets, spatial, inter, sr, pcfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for frame in result.frames:
        if frame.m == 1:
            frame.views[0].save(out / f"frame_{frame.index:06d}.png")
        else:
            for j, v in enumerate(frame.views):
                d = out / f"view_{j}"
                d.mkdir(exist_ok=True)
                v.save(d / f"frame_{frame.index:06d}.png")
    report = latency_report(result.ledger, float(cfg.get("latency.budget_ms")))
    text = format_latency_report(report)
    if lossy:
        text += "\nNOTE: lossy input images detected; metrics may be biased"
    if result.trailing_frame is not None:
        text += f"\nTrailing unpaired input frame: {result.trailing_frame}"
    (out / "report.txt").write_text(text + "\n")
    print(text)
    print(f"wrote {len(result.frames)} frames to {out}")
    return 0


def cmd_bench(args) -> int:
    cfg = Config.load(args.config) if args.config else Config()
    resolutions = cfg.get("bench.resolutions", ["128x96", "256x192"])
    spec_doc = cfg.get("bench.synthetic", {})
    ring = CameraRingSpec(**spec_doc.pop("ring", {})) if spec_doc else CameraRingSpec()
    spec_args = dict(spec_doc)
    spec_args.setdefault("num_gaussians", 128)
    spec_args.setdefault("duration", 21)
    spec_args.setdefault("velocity", 0.01)
    spec = SyntheticSceneSpec(ring=ring, **spec_args)
    rows = []
    for res in resolutions:
        cfg.set("pipeline.resolution", res)
        width, height = cfg.resolution()
        gen = SyntheticSceneGenerator(spec)
        cams = gen.cameras(width, height)
        rig = cams[:2]
        targets = [cams[len(cams) // 2]]
        spatial = SyntheticOracleStage(gen.scene_at)
        _, inter, sr = _make_stages(cfg, gen)
        frames = list(gen.frame_source(rig, width, height))  # preprocessing, untimed
        result = run_pipeline(frames, rig, targets, spatial, inter, sr,
                              PipelineConfig(input_fps=float(cfg.get("input.fps"))))
        report = latency_report(result.ledger, float(cfg.get("latency.budget_ms")))
        print(f"\n== {res} -> {2 * width}x{2 * height} ==")
        print(format_latency_report(report))
        rows.append((res, f"{result.ledger.emitted_frames}",
                     f"{report.amortized_ms_per_frame:.1f}"))
    print()
    print(format_metric_table(rows, headers=("Resolution", "Frames", "Amortized (ms)")))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import StreamEngine, create_app
    from .stages import BicubicSuperRes, BlendInterpolator

    cfg = Config.load(args.config) if args.config else Config()
    width, height = cfg.resolution()
    spec = (synthetic_spec_from_yaml(args.input) if args.input
            else SyntheticSceneSpec(num_gaussians=64, duration=10_000, velocity=0.002))
    gen = SyntheticSceneGenerator(spec)
    cams = gen.cameras(width, height)
    rig = cams[:2]
    engine = StreamEngine(
        source=gen.frame_source(rig, width, height),
        rig=rig,
        target=cams[len(cams) // 2],
        spatial=SyntheticOracleStage(gen.scene_at),
        interpolator=BlendInterpolator(),
        superres=BicubicSuperRes(),
        width=width, height=height,
        fps=float(cfg.get("input.fps")),
        stats_interval_s=float(cfg.get("serve.stats_interval_s")),
        pace=True,
    )
    app = create_app(engine)
    uvicorn.run(app, host=cfg.get("serve.host"), port=int(args.port or cfg.get("serve.port")))
    return 0


def _load_frame_dir(path) -> list:
    files = sorted(Path(path).glob("frame_*.png"))
    if not files:
        raise DatasetError(f"no frame_*.png files under {path}")
    return [FrameBuffer.load(p) for p in files]


def cmd_metrics(args) -> int:
    rows = []
    if args.pred and args.gt:
        pred = _load_frame_dir(args.pred)
        gt = _load_frame_dir(args.gt)
        mean_db = stream_psnr(pred, gt)
        for i, (p, g) in enumerate(zip(pred, gt)):
            rows.append((f"frame_{i:06d}", f"{psnr(p, g):.2f}", "-"))
        print(format_metric_table(rows))
        print(f"\nStream PSNR: {mean_db:.2f} dB over {len(pred)} frames")
    if args.pred_poses and args.gt_poses:
        pred = [s.camera(2, 2)[0] for s in load_pose_file(args.pred_poses)]
        gt = [s.camera(2, 2)[0] for s in load_pose_file(args.gt_poses)]
        rep = pose_error_metrics(pred, gt, tau=args.tau)
        print(f"RRA@{args.tau:g}: {rep.rra_at_tau:.2f}  RTA@{args.tau:g}: "
              f"{rep.rta_at_tau:.2f}  AUC@30: {rep.auc_at_30:.2f}")
    if not rows and not (args.pred_poses and args.gt_poses):
        print("nothing to compute: pass --pred/--gt and/or --pred-poses/--gt-poses",
              file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="splatstream",
                                description="Real-time novel-view streaming pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the pipeline and write frames + reports")
    run.add_argument("--input", required=True,
                     help="dataset root directory or synthetic scene spec (.yaml)")
    run.add_argument("--views", help="comma-separated input view indices, e.g. 0,1")
    run.add_argument("--target", help="target pose file")
    run.add_argument("--res", help="input resolution WxH (output is 2Wx2H)")
    run.add_argument("--fps", type=float, help="input frame rate")
    run.add_argument("--config", help="YAML config file")
    run.add_argument("--out", default="out", help="output directory")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="latency breakdown over configured resolutions")
    bench.add_argument("--config", help="YAML config file")
    bench.set_defaults(func=cmd_bench)

    serve = sub.add_parser("serve", help="expose the live wire protocol")
    serve.add_argument("--input", help="synthetic scene spec (.yaml)")
    serve.add_argument("--config", help="YAML config file")
    serve.add_argument("--port", type=int)
    serve.set_defaults(func=cmd_serve)

    met = sub.add_parser("metrics", help="PSNR / pose reports from stored outputs")
    met.add_argument("--pred", help="directory of predicted frames")
    met.add_argument("--gt", help="directory of reference frames")
    met.add_argument("--pred-poses", help="predicted pose file")
    met.add_argument("--gt-poses", help="ground-truth pose file")
    met.add_argument("--tau", type=float, default=5.0)
    met.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
