"""Operator command line: simulate, benchmark, gen-data, serve, bench-throughput.

All randomness flows from --seed flags; outputs are reproducible from
(inputs, flags, seed).  --workers defaults to the SPADE_WORKERS environment
variable, then 1.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path


from .analytics import emit_report, head_to_head, median_mlt, percent_lift
from .core import ConfigError, EndpointSpec, PolicyConfig
from .data_io import (
    SyntheticConfig,
    default_signal_bits,
    generate_synthetic,
    load_binary,
    load_csv,
    save_binary,
    save_csv,
)
from .scoring import throughput_benchmark
from .simulator import limit_worker_threads, make_policy, run_replicates

POLICY_CHOICES = ("spade", "random", "gp-m", "gp-ucb", "gp-ei", "gp-pi")
ENDPOINT_CHOICES = {"avg10": (EndpointSpec.AVG, 10), "min3": (EndpointSpec.MIN, 3)}


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SPADE_WORKERS", "1")))
    except ValueError:
        return 1


def load_dataset(path: str):
    p = Path(path)
    if p.suffix == ".spdf":
        return load_binary(p)
    return load_csv(p)


def endpoint_from_args(args) -> EndpointSpec:
    kind, k = ENDPOINT_CHOICES[args.endpoint]
    return EndpointSpec(kind, k, args.target)


def config_from_args(args) -> PolicyConfig:
    kwargs = dict(batch_size=args.batch)
    for name in ("sigma", "alpha", "beta", "n_max", "p_plus"):
        val = getattr(args, name, None)
        if val is not None:
            kwargs[name] = val
    if getattr(args, "no_help_limit", False):
        kwargs["help_limit"] = None
    elif getattr(args, "help_limit", None) is not None:
        kwargs["help_limit"] = args.help_limit
    return PolicyConfig(**kwargs)


def run_dir(args) -> Path:
    run_id = getattr(args, "run_id", None)
    if not run_id:
        blob = json.dumps({k: v for k, v in sorted(vars(args).items())
                           if k != "func"}, default=str, sort_keys=True)
        run_id = hashlib.sha1(blob.encode()).hexdigest()[:10]
    out = Path(args.out) / run_id
    (out / "logs").mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, content: str):
    path.write_text(content, encoding="utf-8")
    print(f"wrote {path}")


def cmd_simulate(args) -> int:
    dataset = load_dataset(args.data)
    endpoint = endpoint_from_args(args)
    config = config_from_args(args)
    policy = make_policy(args.policy, config)
    out = run_dir(args)
    result = run_replicates(dataset, policy, endpoint, reps=args.reps,
                            base_seed=args.seed, cap=args.cap,
                            workers=args.workers)
    docs = emit_report([result])
    _write(out / "report.csv", docs["report.csv"])
    _write(out / "summary.txt", docs["summary.txt"])
    runs = "seed,ligands_to_target,failed\n" + "".join(
        f"{s},{ltt},{int(f)}\n" for s, ltt, f in
        zip(result.seeds, result.ligands_to_target, result.failed))
    _write(out / "runs.csv", runs)
    log = {"protein": dataset.protein_id, "policy": args.policy,
           "endpoint": endpoint.label, "mlt": result.mlt,
           "failure_rate": result.failure_rate}
    _write(out / "logs" / "run.json", json.dumps(log, sort_keys=True, indent=2))
    print(f"MLT {result.mlt:.1f}  failure rate {result.failure_rate:.3f}")
    return 0


def _protein_specs(args):
    """(label, loader-arg) pairs: synthetic seeds or explicit dataset files."""
    if args.data:
        return [("file", p) for p in args.data]
    return [("synthetic", args.protein_seed_base + i)
            for i in range(args.proteins)]


def _bench_job(job):
    kind, spec, policy_name, cfg_kwargs, endpoint_kwargs, reps, seed, cap, syn = job
    if kind == "file":
        dataset = load_dataset(spec)
    else:
        dataset = generate_synthetic(SyntheticConfig(seed=spec, **syn))
    policy = make_policy(policy_name, PolicyConfig(**cfg_kwargs))
    endpoint = EndpointSpec(**endpoint_kwargs)
    return run_replicates(dataset, policy, endpoint, reps=reps,
                          base_seed=seed, cap=cap)


def cmd_benchmark(args) -> int:
    endpoint = endpoint_from_args(args)
    config = config_from_args(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        make_policy(p, config)
    out = run_dir(args)
    syn = dict(n_ligands=args.ligands, dim=args.dim,
               signal_bits=default_signal_bits(args.dim))
    cfg_kwargs = {f: getattr(config, f) for f in PolicyConfig.__dataclass_fields__}
    endpoint_kwargs = dict(kind=endpoint.kind, k=endpoint.k, target=endpoint.target)
    jobs = [(kind, spec, pol, cfg_kwargs, endpoint_kwargs, args.reps, args.seed,
             args.cap, syn)
            for kind, spec in _protein_specs(args) for pol in policies]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers,
                                 initializer=limit_worker_threads) as pool:
            results = list(pool.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]

    docs = emit_report(results)
    _write(out / "report.csv", docs["report.csv"])
    _write(out / "h2h.csv", docs["h2h.csv"])
    _write(out / "summary.txt", docs["summary.txt"])

    # Table-3-style lift of the first policy over each other, per protein medians
    if len(policies) > 1:
        base = policies[0]
        by_policy = {}
        for r in results:
            by_policy.setdefault(r.policy_name, {})[r.protein_id] = r
        lines = ["policy_a,policy_b,median_mlt_a,median_mlt_b,median_lift_pct,"
                 "proteins_a_better,proteins_b_better\n"]
        for other in policies[1:]:
            med_a = median_mlt([r.mlt for r in by_policy[base].values()])
            med_b = median_mlt([r.mlt for r in by_policy[other].values()])
            wins_a = wins_b = 0
            for prot, ra in by_policy[base].items():
                rb = by_policy[other].get(prot)
                if rb is None:
                    continue
                h = head_to_head(ra.ligands_to_target, rb.ligands_to_target)
                wins_a += h.verdict == "A"
                wins_b += h.verdict == "B"
            lines.append(f"{base},{other},{med_a},{med_b},"
                         f"{percent_lift(med_a, med_b):.4f},{wins_a},{wins_b}\n")
        _write(out / "lift.csv", "".join(lines))
    print(docs["summary.txt"])
    return 0


def cmd_gen_data(args) -> int:
    signal_bits = args.signal_bits
    if signal_bits is None:
        signal_bits = default_signal_bits(args.dim)
    cfg = SyntheticConfig(
        n_ligands=args.ligands, dim=args.dim, bit_density=args.density,
        signal_bits=signal_bits, noise_scale=args.noise,
        frac_ge_8=args.frac8, frac_ge_85=args.frac85, seed=args.seed,
        protein_id=args.protein_id or "")
    dataset = generate_synthetic(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".spdf":
        save_binary(dataset, out)
    else:
        save_csv(dataset, out)
    print(f"wrote {out} ({dataset.n} ligands, d={dataset.dim}, "
          f"P[pic>=8]={float((dataset.pics >= 8).mean()):.4f})")
    return 0


def cmd_serve(args) -> int:
    from .server import serve_forever
    assets = args.assets
    if assets is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        assets = bundled if bundled.is_dir() else None
    serve_forever(args.data_dir, port=args.port, host=args.host,
                  assets_dir=assets)
    return 0


def cmd_bench_throughput(args) -> int:
    report = throughput_benchmark(n_ligands=args.ligands, dim=args.dim,
                                  n_classifiers=args.classifiers,
                                  seed=args.seed, chunk=args.chunk)
    print(report.text())
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _write(out, json.dumps(report.__dict__, sort_keys=True, indent=2) + "\n")
    return 0


def _add_policy_flags(p: argparse.ArgumentParser):
    p.add_argument("--batch", type=int, default=10, help="ligand tests per cycle")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--p-plus", dest="p_plus", type=float, default=None)
    p.add_argument("--help-limit", dest="help_limit", type=int, default=None)
    p.add_argument("--no-help-limit", dest="no_help_limit", action="store_true")


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--endpoint", choices=sorted(ENDPOINT_CHOICES), default="avg10")
    p.add_argument("--target", type=float, default=8.0)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--cap", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--run-id", default=None)
    p.add_argument("--workers", type=int, default=_default_workers())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spade", description="sequential ligand selection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replicated campaigns on one dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--policy", choices=POLICY_CHOICES, default="spade")
    _add_policy_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="policy comparison over many proteins")
    p.add_argument("--policies", default="spade,random",
                   help="comma-separated policy list; first is the reference")
    p.add_argument("--data", nargs="*", default=None,
                   help="dataset files (default: synthetic proteins)")
    p.add_argument("--proteins", type=int, default=20)
    p.add_argument("--protein-seed-base", type=int, default=0)
    p.add_argument("--ligands", type=int, default=5000)
    p.add_argument("--dim", type=int, default=2048)
    _add_policy_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("gen-data", help="write a calibrated synthetic dataset")
    p.add_argument("--ligands", type=int, default=5000)
    p.add_argument("--dim", type=int, default=2048)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--signal-bits", dest="signal_bits", type=int, default=None,
                   help="informative bits (default scales with --dim)")
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--frac8", type=float, default=0.07)
    p.add_argument("--frac85", type=float, default=0.027)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--protein-id", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("serve", help="run the live campaign service")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default="campaigns")
    p.add_argument("--assets", default=None,
                   help="dashboard asset directory (default: bundled build)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench-throughput", help="time ensemble scoring")
    p.add_argument("--ligands", type=int, default=1_000_000)
    p.add_argument("--dim", type=int, default=2048)
    p.add_argument("--classifiers", type=int, default=20)
    p.add_argument("--chunk", type=int, default=32768)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_throughput)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
