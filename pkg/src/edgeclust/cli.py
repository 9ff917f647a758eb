"""Command-line entry point: ``edgeclust {gen,knn,train,infer,eval,bench-ni}``.

Exit status is 0 on success, 1 on a usage error and 2 when the command
itself fails. Logs go to stderr; results go to the named output files,
which are byte-identical for any ``--threads`` value.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import statistics
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import io, kernels
from .core import SampleSpec
from .errors import ClusteringError, LengthMismatch
from .gcn import init_model
from .inference import AGGREGATIONS, InferConfig, node_intimacy, run_inference
from .knn import KnnConfig, build_knn_graph
from .metrics import evaluate
from .synth import SynthConfig, generate, random_graph, split_classes
from .trainer import TrainConfig, train

log = logging.getLogger("edgeclust")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--threads", type=_positive_int, default=argparse.SUPPRESS)
    p.add_argument(
        "--log-level",
        default=argparse.SUPPRESS,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="edgeclust", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate synthetic features and labels")
    p.add_argument("--classes", type=int, default=50)
    p.add_argument("--per-class-min", type=int, default=30)
    p.add_argument("--per-class-max", type=int, default=60)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--out-features", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--test-frac", type=float, default=0.0,
                   help="fraction of classes moved to a held-out split")
    p.add_argument("--out-test-features")
    p.add_argument("--out-test-labels")

    p = sub.add_parser("knn", parents=[common], help="build the KNN affinity graph")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, default=80)
    p.add_argument("--directed", action="store_true", help="skip union symmetrization")
    p.add_argument("--out-graph", required=True)

    p = sub.add_parser("train", parents=[common], help="train the edge model")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=80)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n-neighbors", type=int, default=750)
    p.add_argument("--k1", type=int, default=1300)
    p.add_argument("--k2", type=float, default=0.9)
    p.add_argument("--whole-graph", action="store_true", help="disable subgraph sampling")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=1e-5)
    p.add_argument("--optimizer", choices=["sgd", "adam"], default="sgd",
                   help="adam reuses --momentum as beta1")
    p.add_argument("--gcn-dims", type=_int_list, default=(512, 256))
    p.add_argument("--mlp-hidden", type=int, default=128)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-loss", help="loss CSV (default: <out-model>.loss.csv)")

    p = sub.add_parser("infer", parents=[common], help="cluster features with a trained model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=80)
    p.add_argument("--tau1", type=float, default=0.7)
    p.add_argument("--tau2", type=float, default=0.72)
    p.add_argument("--agg", choices=AGGREGATIONS, default="max")
    p.add_argument("--skip-parsing", action="store_true")
    p.add_argument("--skip-refinement", action="store_true")
    p.add_argument("--out-labels", required=True)

    p = sub.add_parser("eval", parents=[common], help="score predicted labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out-report", required=True)

    p = sub.add_parser("bench-ni", parents=[common], help="time node intimacy on random graphs")
    p.add_argument("--nodes", type=_int_list, default=(10_000, 20_000, 40_000))
    p.add_argument("--avg-degree", type=float, default=20.0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--backend", choices=kernels.available_backends())
    return parser


def cmd_gen(args):
    cfg = SynthConfig(
        num_classes=args.classes,
        points_min=args.per_class_min,
        points_max=args.per_class_max,
        dim=args.dim,
        noise_scale=args.noise,
        overlap_scale=args.overlap,
        seed=args.seed,
    )
    fs, gt = generate(cfg)
    if args.test_frac > 0:
        if not (args.out_test_features and args.out_test_labels):
            raise UsageError("--test-frac needs --out-test-features and --out-test-labels")
        (fs, gt), (te_fs, te_gt) = split_classes(fs, gt, 1.0 - args.test_frac, seed=args.seed)
        io.write_features(args.out_test_features, te_fs)
        io.write_labels(args.out_test_labels, te_gt)
        log.info("held out %d rows", te_fs.n)
    io.write_features(args.out_features, fs)
    io.write_labels(args.out_labels, gt)
    log.info("wrote %d rows of width %d", fs.n, fs.d)


def cmd_knn(args):
    fs = io.read_features(args.features)
    graph = build_knn_graph(fs, KnnConfig(k=args.k, symmetrize=not args.directed,
                                          num_threads=args.threads))
    io.write_graph(args.out_graph, graph)
    log.info("graph: %d nodes, %d stored edges", graph.n, graph.nnz)


def cmd_train(args):
    fs = io.read_features(args.features)
    gt = io.read_labels(args.labels)
    if gt.n != fs.n:
        raise LengthMismatch(f"{fs.n} feature rows but {gt.n} labels")
    if args.lr == 0:
        log.warning("learning rate is 0: the model will not change")
    knn_cfg = KnnConfig(k=args.k, symmetrize=True, num_threads=args.threads)
    spec = None
    if not args.whole_graph:
        spec = SampleSpec(m=args.m, n_neighbors=args.n_neighbors, k1=args.k1,
                          k2_frac=args.k2, seed=args.seed)
    cfg = TrainConfig(
        iterations=args.iters,
        lr=args.lr,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        optimizer=args.optimizer,
        seed=args.seed,
        sample_spec=spec,
        knn_cfg=knn_cfg,
    )
    model = init_model(fs.d, args.gcn_dims, args.mlp_hidden, seed=args.seed)

    def report(step, loss, sub):
        if step % 50 == 0 or step == cfg.iterations - 1:
            log.info("step %d/%d  nodes %d  loss %.5f", step + 1, cfg.iterations, sub.n, loss)

    model, losses = train(fs, gt, model, cfg, on_step=report)
    io.checkpoint(model, args.out_model)
    loss_path = args.out_loss or f"{args.out_model}.loss.csv"
    with open(loss_path, "w") as f:
        f.write("step,loss\n")
        f.writelines(f"{i},{v!r}\n" for i, v in enumerate(losses))
    log.info("wrote %s and %s", args.out_model, loss_path)


def cmd_infer(args):
    fs = io.read_features(args.features)
    model = io.read_model(args.model)
    infer_cfg = InferConfig(
        tau1=args.tau1,
        tau2=args.tau2,
        aggregation=args.agg,
        skip_parsing=args.skip_parsing,
        skip_refinement=args.skip_refinement,
    )
    res = run_inference(fs, model, KnnConfig(k=args.k, num_threads=args.threads), infer_cfg)
    io.write_partition(args.out_labels, res.partition)
    log.info(
        "knn edges %d, after parsing %d, after refinement %d, clusters %d",
        res.knn_graph.nnz // 2, res.parsed.nnz // 2, res.refined.nnz // 2,
        res.partition.num_clusters,
    )


def cmd_eval(args):
    report = evaluate(io.read_labels(args.pred), io.read_labels(args.gt))
    with open(args.out_report, "w") as f:
        f.write(report.to_json())
    log.info("pairwise F %.4f  bcubed F %.4f  nmi %.4f",
             report.pairwise[2], report.bcubed[2], report.nmi)


def bench_ni(nodes, avg_degree, repeats, seed=0):
    """Median node-intimacy wall time per graph size: ``[(n, edges, sec), ...]``."""
    rows = []
    for n in nodes:
        graph = random_graph(n, avg_degree, seed=seed)
        node_intimacy(graph)  # warm-up
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            node_intimacy(graph)
            times.append(time.perf_counter() - t0)
        rows.append((n, graph.nnz // 2, statistics.median(times)))
    return rows


def cmd_bench_ni(args):
    ctx = kernels.using(args.backend) if args.backend else contextlib.nullcontext()
    with ctx:
        rows = bench_ni(args.nodes, args.avg_degree, args.repeats, seed=args.seed)
        print(f"# backend={kernels.backend()} repeats={args.repeats}")
    print("nodes,edges,seconds,ns_per_edge")
    for n, e, t in rows:
        print(f"{n},{e},{t:.6f},{1e9 * t / max(e, 1):.2f}")


COMMANDS = {
    "gen": cmd_gen,
    "knn": cmd_knn,
    "train": cmd_train,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "bench-ni": cmd_bench_ni,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    for name, default in (("seed", 0), ("threads", 1), ("log_level", "INFO")):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(
        level=args.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        # BLAS summation order depends on its thread count, so BLAS stays
        # single-threaded; --threads fans out fixed-size KNN blocks instead
        with threadpool_limits(limits=1):
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"edgeclust: error: {exc}", file=sys.stderr)
        return 1
    except (ClusteringError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
