"""Command-line surface: simulate data, fit chains, summarise traces.

Every fit writes a manifest holding the input paths, seed, priors, and
run lengths; re-running from the manifest reproduces the trace bit for
bit. Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .aggregation import aggregate, read_dataset_csv, write_dataset_csv
from .errors import ConfigError, SnapError, UsageError
from .geometry import (
    bounding_region,
    read_edges_csv,
    read_events_csv,
    snap_events,
    write_edges_csv,
    write_events_csv,
)
from .gibbs import (
    SamplerConfig,
    Trace,
    read_trace_jsonl,
    run,
    write_trace_jsonl,
)
from .model import FixedValue, GammaPrior, Hyperparams
from .posterior import (
    modal_partition,
    num_groups_posterior,
    num_groups_posterior_restricted,
    restrict,
    write_cluster_summary_csv,
    write_distribution_csv,
    write_lambda_samples_csv,
)
from .synth import load_scenario, make_grid_network, simulate_events

DEFAULT_LAMBDA_STAR = (1.0, 2.0, 4.0, 6.0)


# ---------------------------------------------------------------------------
# Manifest


def _prior_to_doc(prior) -> dict:
    if isinstance(prior, FixedValue):
        return {"type": "fixed", "value": prior.value}
    return {"type": "gamma", "shape": prior.shape, "rate": prior.rate}


def _prior_from_doc(doc: dict):
    if doc["type"] == "fixed":
        return FixedValue(float(doc["value"]))
    if doc["type"] == "gamma":
        return GammaPrior(float(doc["shape"]), float(doc["rate"]))
    raise UsageError(f"unknown prior type {doc['type']!r}")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a fit: inputs, seed, priors, lengths."""

    version: str
    seed: int
    chains: int
    edges: str
    events: str
    outdir: str
    snap_tol: float
    margin: float
    iterations: int
    burnin: int
    thin: int
    hyper: Hyperparams
    lambda_star: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "chains": self.chains,
            "edges": self.edges,
            "events": self.events,
            "outdir": self.outdir,
            # JSON has no Infinity; an absent tolerance means "no limit"
            "snap_tol": None if math.isinf(self.snap_tol) else self.snap_tol,
            "margin": self.margin,
            "iterations": self.iterations,
            "burnin": self.burnin,
            "thin": self.thin,
            "lambda_prior": _prior_to_doc(self.hyper.lambda_prior),
            "theta_prior": _prior_to_doc(self.hyper.theta_prior),
            "tau_prior": _prior_to_doc(self.hyper.tau_prior),
            "lambda_star": list(self.lambda_star),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        try:
            snap_tol = doc["snap_tol"]
            return cls(
                version=str(doc["version"]),
                seed=int(doc["seed"]),
                chains=int(doc["chains"]),
                edges=str(doc["edges"]),
                events=str(doc["events"]),
                outdir=str(doc["outdir"]),
                snap_tol=math.inf if snap_tol is None else float(snap_tol),
                margin=float(doc["margin"]),
                iterations=int(doc["iterations"]),
                burnin=int(doc["burnin"]),
                thin=int(doc["thin"]),
                hyper=Hyperparams(
                    lambda_prior=_prior_from_doc(doc["lambda_prior"]),
                    theta_prior=_prior_from_doc(doc["theta_prior"]),
                    tau_prior=_prior_from_doc(doc["tau_prior"]),
                ),
                lambda_star=tuple(float(v) for v in doc["lambda_star"]),
            )
        except KeyError as exc:
            raise UsageError(f"manifest is missing key {exc}") from exc

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


# ---------------------------------------------------------------------------
# Flag parsing helpers


def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"{flag} expects two comma-separated numbers, got {text!r}")
    try:
        a, b = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{flag} expects numbers, got {text!r}") from None
    return a, b


def _parse_float_list(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} needs at least one value")
    return values


def _threshold_tag(value: float) -> str:
    text = f"{value:g}"
    return text.replace(".", "p").replace("-", "m").replace("+", "")


def _hyper_from_args(args) -> Hyperparams:
    lam_a, lam_b = _parse_pair(args.lambda_prior, "--lambda-prior")
    if args.fixed_theta is not None:
        theta = FixedValue(args.fixed_theta)
    else:
        th_a, th_b = _parse_pair(args.theta_prior, "--theta-prior")
        theta = GammaPrior(th_a, th_b)
    if args.fixed_tau is not None:
        tau = FixedValue(args.fixed_tau)
    else:
        ta_c, ta_d = _parse_pair(args.tau_prior, "--tau-prior")
        tau = GammaPrior(ta_c, ta_d)
    try:
        return Hyperparams(GammaPrior(lam_a, lam_b), theta, tau)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    network = make_grid_network(scenario.rows, scenario.cols, scenario.spacing)
    pattern, truth = simulate_events(network, scenario.clusters, args.seed)
    os.makedirs(args.out, exist_ok=True)
    edges_path = os.path.join(args.out, "edges.csv")
    events_path = os.path.join(args.out, "events.csv")
    truth_path = os.path.join(args.out, "truth.csv")
    write_edges_csv(edges_path, network)
    write_events_csv(events_path, pattern)
    with open(truth_path, "w", newline="") as fh:
        fh.write("edge_id,cluster\n")
        for eid in sorted(truth):
            fh.write(f"{eid},{truth[eid]}\n")
    print(f"wrote {edges_path} ({len(network)} edges)")
    print(f"wrote {events_path} ({len(pattern)} events on {len(truth)} edges)")
    print(f"wrote {truth_path}")
    return 0


def _run_chain(dataset, config: SamplerConfig, path: str) -> str:
    trace = run(dataset, config)
    write_trace_jsonl(path, trace)
    return path


def _fit_from_manifest(manifest: RunManifest, outdir: str) -> int:
    network = read_edges_csv(manifest.edges)
    pattern = read_events_csv(manifest.events)
    region = bounding_region(network, manifest.margin)
    if pattern.assignments is None:
        pattern = snap_events(network, pattern, manifest.snap_tol)
    dataset = aggregate(network, pattern, region)

    os.makedirs(outdir, exist_ok=True)
    write_dataset_csv(os.path.join(outdir, "dataset.csv"), dataset)

    configs = [
        SamplerConfig(
            iterations=manifest.iterations,
            burnin=manifest.burnin,
            thin=manifest.thin,
            seed=manifest.seed + chain,
            hyper=manifest.hyper,
        )
        for chain in range(manifest.chains)
    ]
    if manifest.chains == 1:
        paths = [os.path.join(outdir, "trace.jsonl")]
        _run_chain(dataset, configs[0], paths[0])
    else:
        paths = [
            os.path.join(outdir, f"trace.{chain}.jsonl")
            for chain in range(manifest.chains)
        ]
        workers = min(manifest.chains, os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chain, dataset, cfg, path)
                for cfg, path in zip(configs, paths)
            ]
            for fut in futures:
                fut.result()
    manifest.save(os.path.join(outdir, "manifest.json"))
    print(f"fit {dataset.n} edges ({int(dataset.counts.sum())} events)")
    for path in paths:
        print(f"wrote {path}")
    print(f"wrote {os.path.join(outdir, 'manifest.json')}")
    return 0


def cmd_fit(args) -> int:
    if args.manifest is not None:
        manifest = RunManifest.load(args.manifest)
        outdir = os.path.abspath(args.out) if args.out is not None else manifest.outdir
        return _fit_from_manifest(manifest, outdir)
    if args.edges is None or args.events is None:
        raise UsageError("fit needs --edges and --events (or --manifest)")
    if args.chains < 1:
        raise UsageError("--chains must be >= 1")
    if args.snap_tol < 0:
        raise UsageError("--snap-tol must be nonnegative")
    outdir = os.path.abspath(args.out if args.out is not None else ".")
    try:
        hyper = _hyper_from_args(args)
        manifest = RunManifest(
            version=__version__,
            seed=args.seed,
            chains=args.chains,
            edges=os.path.abspath(args.edges),
            events=os.path.abspath(args.events),
            outdir=outdir,
            snap_tol=args.snap_tol,
            margin=args.margin,
            iterations=args.iters,
            burnin=args.burnin,
            thin=args.thin,
            hyper=hyper,
            lambda_star=_parse_float_list(args.lambda_star, "--lambda-star"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return _fit_from_manifest(manifest, outdir)


def cmd_summarize(args) -> int:
    if len(args.trace) > 1 and not args.pool:
        raise UsageError("multiple traces given; pass --pool to combine them")
    records = []
    for path in args.trace:
        records.extend(read_trace_jsonl(path).records)
    if not records:
        raise UsageError("trace is empty")
    dataset_path = args.dataset or os.path.join(
        os.path.dirname(os.path.abspath(args.trace[0])), "dataset.csv"
    )
    dataset = read_dataset_csv(dataset_path)
    if dataset.n != records[0].partition.n:
        raise UsageError(
            f"trace covers {records[0].partition.n} items but dataset has {dataset.n} edges"
        )
    thresholds = _parse_float_list(args.lambda_star, "--lambda-star")

    outdir = args.out or os.path.dirname(os.path.abspath(args.trace[0]))
    os.makedirs(outdir, exist_ok=True)

    est = modal_partition(records)
    print(
        f"modal partition: {est.partition.k} groups, frequency {est.frequency:.6g} "
        f"({est.records_matched}/{len(records)} records)"
    )
    write_cluster_summary_csv(
        os.path.join(outdir, "modal_partition.csv"), dataset.edge_ids, est
    )
    write_lambda_samples_csv(os.path.join(outdir, "lambda_samples.csv"), est)
    write_distribution_csv(
        os.path.join(outdir, "num_groups.csv"), num_groups_posterior(records)
    )

    restricted_means = {}
    for value in thresholds:
        tag = _threshold_tag(value)
        sel = restrict(est, value)
        print(f"lambda_star={value:g}: groups {list(sel.selected_groups)}")
        write_cluster_summary_csv(
            os.path.join(outdir, f"hotspots_lambda_star_{tag}.csv"),
            dataset.edge_ids,
            est,
            sel,
        )
        counts = num_groups_posterior_restricted(records, value)
        write_distribution_csv(
            os.path.join(outdir, f"num_groups_lambda_star_{tag}.csv"), counts.masses
        )
        restricted_means[f"{value:g}"] = counts.mean

    with open(os.path.join(outdir, "estimate.json"), "w") as fh:
        json.dump(
            {
                "num_groups": est.partition.k,
                "frequency": est.frequency,
                "records_matched": est.records_matched,
                "records_total": len(records),
                "mean_intensity": list(est.mean_intensity),
                "restricted_mean_counts": restricted_means,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    print(f"wrote summaries to {outdir}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgeclust",
        description="Cluster edges of a linear network from point events and extract hot-spots.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic network and events")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON path")
    p_sim.add_argument("--out", default=".", help="output directory")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="run the sampler on edge/event CSVs")
    p_fit.add_argument("--edges", help="edge CSV (edge_id,x1,y1,x2,y2)")
    p_fit.add_argument("--events", help="event CSV (x,y[,edge_id])")
    p_fit.add_argument("--out", default=None, help="output directory")
    p_fit.add_argument("--manifest", default=None, help="rerun a saved manifest")
    p_fit.add_argument("--iters", type=int, default=15000)
    p_fit.add_argument("--burnin", type=int, default=10000)
    p_fit.add_argument("--thin", type=int, default=1)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--chains", type=int, default=1)
    p_fit.add_argument("--lambda-prior", default="1.1,0.1", metavar="a,b")
    p_fit.add_argument("--theta-prior", default="1.1,0.1", metavar="a,b")
    p_fit.add_argument("--tau-prior", default="1e11,1e4", metavar="c,d")
    p_fit.add_argument("--fixed-theta", type=float, default=None, metavar="X")
    p_fit.add_argument("--fixed-tau", type=float, default=None, metavar="X")
    p_fit.add_argument("--snap-tol", type=float, default=math.inf, metavar="T")
    p_fit.add_argument("--margin", type=float, default=0.05, metavar="M")
    p_fit.add_argument("--lambda-star", default="1,2,4,6", metavar="L1,L2,...")
    p_fit.set_defaults(func=cmd_fit)

    p_sum = sub.add_parser("summarize", help="summarise a trace into CSV tables")
    p_sum.add_argument("--trace", nargs="+", required=True, help="trace JSONL path(s)")
    p_sum.add_argument("--dataset", default=None, help="dataset CSV (default: sibling)")
    p_sum.add_argument("--out", default=None, help="output directory")
    p_sum.add_argument("--lambda-star", default="1,2,4,6", metavar="L1,L2,...")
    p_sum.add_argument("--pool", action="store_true", help="pool multiple traces")
    p_sum.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (UsageError, ConfigError, SnapError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
