"""Command-line entry point: synth, train, track, eval.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric
failure. Training and tracking require an explicit --seed; reruns with the
same inputs and seed produce byte-identical checkpoints and result files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .config import ConfigError, ExperimentConfig, load_config
from .data import (DataError, detect_layout, list_sequence_dirs, load_results,
                   load_sequence, save_results, write_sequence)
from .evaluation import (EvalConfig, SequenceResult, attribute_breakdown,
                         center_errors, overlaps, plot_curves,
                         precision_curve_from_errors, pooled_metrics,
                         success_curve_from_overlaps, write_attribute_table,
                         write_curve, write_summary)
from .model import DAPNet, VARIANTS
from .sampling import SamplingExhaustedError
from .synth import dataset_configs, synth_sequence
from .tracking import TrackConfig, track_sequence
from .training import NumericError, TrainConfig, train_offline

PRECISION_GRID = tuple(float(t) for t in range(0, 51))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def train_config_from(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs, max_iterations=cfg.max_iterations,
        lr_conv=cfg.lr_conv, lr_fc=cfg.lr_fc, momentum=cfg.momentum,
        weight_decay=cfg.weight_decay, clip_gradient=cfg.clip_gradient,
        frames_per_batch=cfg.frames_per_batch, pos_per_frame=cfg.pos_per_frame,
        neg_per_frame=cfg.neg_per_frame, pos_iou_min=cfg.pos_iou_min,
        neg_iou_max=cfg.neg_iou_max, wrs_ratio=cfg.wrs_ratio,
        prune_rescale=cfg.prune_rescale, seed=seed,
    )


def track_config_from(cfg: ExperimentConfig) -> TrackConfig:
    return TrackConfig(
        n_candidates=cfg.n_candidates,
        force_first_candidate=cfg.force_first_candidate,
        init_pos=cfg.init_pos, init_neg=cfg.init_neg,
        init_iterations=cfg.init_iterations,
        lr_fc45=cfg.track_lr_fc45, lr_fc6=cfg.track_lr_fc6,
        momentum=cfg.momentum, weight_decay=cfg.track_weight_decay,
        update_interval=cfg.update_interval, long_window=cfg.long_window,
        short_window=cfg.short_window, update_iterations=cfg.update_iterations,
        score_threshold=cfg.score_threshold, ridge_lambda=cfg.ridge_lambda,
        harvest_pos=cfg.harvest_pos, harvest_neg=cfg.harvest_neg,
        pos_iou_min=cfg.pos_iou_min, neg_iou_max=cfg.neg_iou_max,
        harvest_neg_iou_max=cfg.harvest_neg_iou_max,
        batch_pos=cfg.track_batch_pos, batch_neg=cfg.track_batch_neg,
    )


def load_model(checkpoint_path, cfg: ExperimentConfig, variant: str) -> DAPNet:
    """Rebuild a network from a checkpoint, inferring the fc6 branch count."""
    arrays = ckpt.load_arrays(checkpoint_path)
    branch_ids = {int(name.split(".")[2]) for name in arrays
                  if name.startswith("head.branches.")}
    n_domains = max(branch_ids) + 1 if branch_ids else 1
    model = DAPNet(cfg.net_config(n_domains=n_domains, variant=variant))
    ckpt.load_into_model(model, checkpoint_path, strict=True)
    return model


# -- commands -------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = load_config(args.config)
    try:
        train_cfgs, test_cfgs = dataset_configs(
            cfg.synth_base(), cfg.synth_n_train, cfg.synth_n_test, args.seed,
            test_rgb_fail=cfg.synth_test_rgb_fail,
            test_t_fail=cfg.synth_test_t_fail,
        )
        splits = [("train", train_cfgs), ("test", test_cfgs)]
        sequences = [(split, k, synth_sequence(c))
                     for split, cfgs in splits for k, c in enumerate(cfgs)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    for split, k, seq in sequences:
        directory = out / split / f"{split}{k:02d}"
        write_sequence(seq, directory, layout=cfg.synth_layout)
        print(f"wrote {directory} ({len(seq)} frames)")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seq_dirs = list_sequence_dirs(args.dataset)
    dataset = [load_sequence(d) for d in seq_dirs]
    net_config = cfg.net_config(n_domains=len(dataset), variant=args.variant)
    train_config = train_config_from(cfg, args.seed)
    out = Path(args.out)
    log_path = out.with_suffix(".log.csv")
    model = train_offline(dataset, net_config, train_config, log_path=log_path)
    ckpt.save_model(out, model)
    print(f"trained {len(dataset)} domains (variant {args.variant}); "
          f"checkpoint {out}, log {log_path}")
    return 0


def cmd_track(args) -> int:
    cfg = load_config(args.config)
    model = load_model(args.checkpoint, cfg, args.variant)
    track_config = track_config_from(cfg)
    dataset = Path(args.dataset)
    try:
        detect_layout(dataset)
        seq_dirs = [dataset]
    except DataError:
        seq_dirs = list_sequence_dirs(dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx, seq_dir in enumerate(seq_dirs):
        seq = load_sequence(seq_dir)
        rng = np.random.default_rng([args.seed, idx])
        # fresh head per sequence: reload the trained fc weights
        if idx > 0:
            model = load_model(args.checkpoint, cfg, args.variant)
        boxes, _ = track_sequence(model, seq, track_config, rng)
        result_path = out / f"{seq.name}.txt"
        save_results(result_path, boxes)
        print(f"tracked {seq.name}: {len(boxes)} frames -> {result_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    pr_threshold = args.pr_threshold if args.pr_threshold is not None else cfg.pr_threshold
    eval_config = EvalConfig(pr_threshold=pr_threshold)
    results_dir = Path(args.results)
    out = Path(args.out)
    seq_results = []
    for seq_dir in list_sequence_dirs(args.dataset):
        seq = load_sequence(seq_dir)
        result_path = results_dir / f"{seq.name}.txt"
        if not result_path.is_file():
            raise DataError(f"no result file for sequence {seq.name!r} "
                            f"(expected {result_path})")
        boxes = load_results(result_path)
        try:
            seq_results.append(SequenceResult(seq.name, boxes, seq.gt,
                                              seq.attributes))
        except ValueError as exc:
            raise DataError(str(exc)) from exc

    pooled_errors = np.concatenate(
        [center_errors(s.results, s.gts) for s in seq_results])
    pooled_ious = np.concatenate(
        [overlaps(s.results, s.gts) for s in seq_results])
    pr_curve = precision_curve_from_errors(pooled_errors, PRECISION_GRID)
    sr_curve = success_curve_from_overlaps(pooled_ious, eval_config.sr_thresholds)
    pr, sr = pooled_metrics(seq_results, eval_config)

    write_curve(out / "precision_curve.csv", PRECISION_GRID, pr_curve)
    write_curve(out / "success_curve.csv", eval_config.sr_thresholds, sr_curve)
    for s in seq_results:
        errors = center_errors(s.results, s.gts)
        ious = overlaps(s.results, s.gts)
        write_curve(out / f"{s.name}_precision.csv", PRECISION_GRID,
                    precision_curve_from_errors(errors, PRECISION_GRID))
        write_curve(out / f"{s.name}_success.csv", eval_config.sr_thresholds,
                    success_curve_from_overlaps(ious, eval_config.sr_thresholds))
    tracker = args.tracker_name or results_dir.name
    write_summary(out / "summary.csv", [{
        "tracker": tracker, "dataset": Path(args.dataset).name,
        "n_sequences": len(seq_results),
        "n_frames": int(len(pooled_errors)),
        "pr": f"{pr:.6f}", "sr": f"{sr:.6f}",
    }])
    write_attribute_table(out / "attributes.csv",
                          attribute_breakdown(seq_results, eval_config))
    if args.plots:
        plot_curves(out / "precision_curve.png",
                    {tracker: (PRECISION_GRID, pr_curve)},
                    "center error threshold (px)", f"precision (PR@{pr_threshold:g} = {pr:.3f})")
        plot_curves(out / "success_curve.png",
                    {tracker: (eval_config.sr_thresholds, sr_curve)},
                    "overlap threshold", f"success (SR = {sr:.3f})")
    print(f"PR@{pr_threshold:g} = {pr:.4f}, SR = {sr:.4f} "
          f"({len(seq_results)} sequences, {len(pooled_errors)} frames) -> {out}")
    return 0


# -- wiring ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dapnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic RGBT dataset")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="offline multi-domain training")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True,
                   help="checkpoint file to write")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("track", help="run the online tracker")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True,
                   help="sequence directory or root of sequence directories")
    p.add_argument("--out", type=Path, required=True, help="results directory")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="PR/SR metrics for tracked results")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--results", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--pr-threshold", type=float, default=None)
    p.add_argument("--tracker-name", default=None)
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ckpt.CheckpointError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, SamplingExhaustedError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
