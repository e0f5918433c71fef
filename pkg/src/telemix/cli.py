"""Command line interface.

Subcommands: prior (exact pmf tables for K and K+), sample (run the
telescoping sampler), identify (relabel draws and extract the MAP
partition), diagnose (posterior tables and autocorrelations), simulate
(benchmark mixture data). Exit codes: 0 success, 2 configuration error,
3 data error, 4 runtime failure.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .identify import acf, adjusted_rand_index, identify, posterior_table
from .kernels import KERNELS
from .partitions import dpm_prior_K_plus, prior_K_plus
from .priors import ConcentrationSpec
from .runio import (ConfigError, DataError, build_manifest, default_out_root,
                    fmt, ingest_csv, load_config_file, load_run,
                    parse_concentration, parse_prior, save_run,
                    simulate_study_data)
from .sampler import SamplerConfig, run

_MISSING = object()


def _out_dir(args, command):
    path = args.out_dir or os.path.join(default_out_root(), command)
    os.makedirs(path, exist_ok=True)
    return path


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _params(text):
    if text is None:
        return []
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError("could not parse parameter list %r" % text)


# ------------------------------------------------------------------- prior

def cmd_prior(args):
    n = args.n
    if n is None or n < 1:
        raise ConfigError("--n must be a positive integer")
    out = _out_dir(args, "prior")

    if args.regime == "dpm":
        if args.alpha is None:
            raise ConfigError("regime dpm needs --alpha")
        p_kplus = dpm_prior_K_plus(n, args.alpha)
        ks = np.arange(1, n + 1)
        p_k = np.full(n, np.nan)  # no finite K under the Dirichlet process
        described = {"regime": "dpm", "alpha": args.alpha}
    else:
        if args.regime == "fixed":
            if args.kfix is None or args.gamma is None:
                raise ConfigError("regime fixed needs --kfix and --gamma")
            prior = parse_prior("pointmass", [args.kfix])
            spec = ConcentrationSpec.static_fixed(args.gamma)
        else:
            if args.prior is None:
                raise ConfigError("--prior is required for regime %s" % args.regime)
            prior = parse_prior(args.prior, _params(args.prior_params))
            value = args.gamma if args.regime == "static" else args.alpha
            if value is None:
                raise ConfigError("regime %s needs a fixed --%s" %
                                  (args.regime, "gamma" if args.regime == "static" else "alpha"))
            spec = parse_concentration(args.regime, value=value)
        p_kplus = prior_K_plus(n, prior, spec)
        hi = n
        while prior.tail_mass(hi) > 1e-9 and hi < 4 * n + 1000:
            hi += n
        ks = np.arange(1, hi + 1)
        p_k = np.exp(prior.log_pmf(ks))
        p_kplus = np.concatenate([p_kplus, np.zeros(hi - n)])
        described = {"regime": args.regime, "prior_k": prior.describe(),
                     "concentration": spec.describe()}

    rows = [(int(k), fmt(pk), fmt(pp)) for k, pk, pp in zip(ks, p_k, p_kplus)]
    _write_csv(os.path.join(out, "prior_k.csv"), ["k", "p_K", "p_Kplus"], rows)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump({"software": {"name": "telemix", "version": __version__},
                   "command": "prior", "n": n, "model": described}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    if not args.no_plots:
        from . import plots
        plots.plot_count_pmfs(out, ks, None if np.all(np.isnan(p_k)) else p_k,
                              ks, p_kplus, name="prior_pmfs.png")
    print("wrote %s" % os.path.join(out, "prior_k.csv"))
    return 0


# ------------------------------------------------------------------ sample

def _resolve_sample_args(args):
    """Merge config file keys with explicit CLI flags (flags win)."""
    merged = {}
    if args.config:
        merged.update(load_config_file(args.config))
    for key in ("data", "kernel", "prior_k", "prior_params", "regime",
                "gamma", "alpha", "alpha_prior", "alpha_prior_params",
                "gamma_prior", "gamma_prior_params", "iters", "burnin",
                "thin", "seed", "chains", "kmax", "k0", "mh_step",
                "adapt_mh", "out_dir"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    defaults = {"iters": 100000, "burnin": 10000, "thin": 1, "seed": 0,
                "chains": 1, "kmax": 100, "k0": 15, "mh_step": 1.0,
                "adapt_mh": True}
    for key, val in defaults.items():
        merged.setdefault(key, val)
    return merged


def _bool(v):
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def _build_model(merged):
    if "data" not in merged:
        raise ConfigError("no data file given (--data or config [data] path)")
    if "kernel" not in merged:
        raise ConfigError("no kernel tag given (--kernel or config [data] kernel)")
    tag = merged["kernel"]
    if tag not in KERNELS:
        raise ConfigError("unknown kernel %r; known: %s"
                          % (tag, ", ".join(sorted(KERNELS))))
    data, info = ingest_csv(merged["data"], tag)
    if tag == "lca":
        kernel = KERNELS[tag].from_data(data, cats=info["categories"])
    else:
        kernel = KERNELS[tag].from_data(data)

    if "prior_k" not in merged:
        raise ConfigError("no component-count prior given (--prior-k)")
    prior = parse_prior(merged["prior_k"], _params(merged.get("prior_params")))

    regime = merged.get("regime")
    if regime not in ("static", "dynamic"):
        raise ConfigError("regime must be static or dynamic, got %r" % regime)
    hyper_key = "gamma_prior" if regime == "static" else "alpha_prior"
    value_key = "gamma" if regime == "static" else "alpha"
    if merged.get(hyper_key):
        spec = parse_concentration(regime, hyper_kind=str(merged[hyper_key]).lower(),
                                   hyper_params=_params(merged.get(hyper_key + "_params")))
    else:
        if merged.get(value_key) is None:
            raise ConfigError("give --%s or --%s" % (value_key, hyper_key.replace("_", "-")))
        spec = parse_concentration(regime, value=float(merged[value_key]))
    return data, info, kernel, prior, spec


def _chain_worker(payload):
    data, kernel, prior, spec, cfg, out_dir, manifest, no_plots = payload
    trace = run(data, kernel, prior, spec, cfg)
    save_run(out_dir, trace, manifest)
    if not no_plots:
        from . import plots
        plots.plot_trace(out_dir, trace)
        t = posterior_table(trace)
        plots.plot_count_pmfs(out_dir, t.k_values, t.p_k, t.kplus_values,
                              t.p_kplus, name="posterior_pmfs.png")
    return out_dir


def cmd_sample(args):
    merged = _resolve_sample_args(args)
    data, info, kernel, prior, spec = _build_model(merged)
    try:
        chains = int(merged["chains"])
        base_seed = int(merged["seed"])
        cfg0 = SamplerConfig(iterations=int(merged["iters"]),
                             burn_in=int(merged["burnin"]),
                             thin=int(merged["thin"]),
                             k_max=int(merged["kmax"]),
                             k_init=int(merged["k0"]),
                             mh_step=float(merged["mh_step"]),
                             adapt_mh=_bool(merged["adapt_mh"]),
                             seed=base_seed)
        cfg0.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))
    if chains < 1:
        raise ConfigError("chains must be >= 1")

    out = merged.get("out_dir") or os.path.join(default_out_root(), "sample")
    os.makedirs(out, exist_ok=True)

    jobs = []
    for c in range(chains):
        cfg = SamplerConfig(**{**cfg0.__dict__, "seed": base_seed + c})
        cdir = out if chains == 1 else os.path.join(out, "chain-%02d" % (c + 1))
        manifest = build_manifest("sample", info, kernel, prior, spec, cfg,
                                  chains, base_seed)
        jobs.append((data, kernel, prior, spec, cfg, cdir, manifest, args.no_plots))

    if chains == 1:
        done = [_chain_worker(jobs[0])]
    else:
        workers = min(chains, os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_chain_worker, jobs))
        top = build_manifest("sample", info, kernel, prior, spec, cfg0,
                             chains, base_seed)
        top["chain_dirs"] = [os.path.basename(d) for d in done]
        with open(os.path.join(out, "manifest.json"), "w") as fh:
            json.dump(top, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for d in done:
        print("chain written to %s" % d)
    return 0


# ---------------------------------------------------------------- identify

def _posterior_csv(path, table):
    hi = int(max(table.k_values.max(), table.kplus_values.max()))
    pk = np.zeros(hi)
    pk[table.k_values - 1] = table.p_k
    pp = np.zeros(hi)
    pp[table.kplus_values - 1] = table.p_kplus
    rows = [(k + 1, fmt(pk[k]), fmt(pp[k])) for k in range(hi)]
    _write_csv(path, ["k", "p_K", "p_Kplus"], rows)


def _read_truth(path, column):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError("%s: empty file" % path)
    if column in rows[0]:
        j = rows[0].index(column)
        body = rows[1:]
    else:
        try:
            j = int(column) - 1
        except ValueError:
            raise ConfigError("--truth-col %r is neither a header name nor a "
                              "1-based index" % column)
        try:
            [float(c) for c in rows[0]]
            body = rows
        except ValueError:
            body = rows[1:]
        if not body or not 0 <= j < len(body[0]):
            raise ConfigError("--truth-col index %s out of range" % column)
    return np.array([r[j].strip() for r in body])


def cmd_identify(args):
    trace = load_run(args.run_dir)
    out = args.out_dir or args.run_dir
    os.makedirs(out, exist_ok=True)
    table = posterior_table(trace)
    try:
        model = identify(trace)
    except ValueError as exc:
        raise DataError(str(exc))

    _posterior_csv(os.path.join(out, "posterior_k.csv"), table)
    _write_csv(os.path.join(out, "partition.csv"),
               ["observation_id", "cluster"],
               [(i + 1, int(c)) for i, c in enumerate(model.map_partition)])

    summary = table.summary()
    summary["K_plus_hat"] = model.k_plus_hat
    summary["retention_rate"] = model.retention_rate
    summary["cluster_sizes"] = model.cluster_sizes.tolist()
    summary["draws"] = int(trace.draws)

    data = None
    if args.data:
        if args.truth_col:
            truth = _read_truth(args.data, args.truth_col)
            if truth.shape[0] != trace.n:
                raise DataError("truth column has %d rows, trace has %d"
                                % (truth.shape[0], trace.n))
            summary["ari"] = adjusted_rand_index(model.map_partition, truth)
        try:
            data, _ = ingest_csv(args.data, trace.kernel_tag)
        except DataError:
            data = None

    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not args.no_plots:
        from . import plots
        plots.plot_count_pmfs(out, table.k_values, table.p_k,
                              table.kplus_values, table.p_kplus,
                              name="posterior_pmfs.png")
        if data is not None:
            plots.plot_partition(out, data, model.map_partition)
    print("identified %d clusters; retention %.3f"
          % (model.k_plus_hat, model.retention_rate))
    return 0


# ---------------------------------------------------------------- diagnose

def cmd_diagnose(args):
    trace = load_run(args.run_dir)
    out = args.out_dir or args.run_dir
    os.makedirs(out, exist_ok=True)
    if trace.draws <= args.max_lag:
        raise ConfigError("--max-lag must be smaller than the number of draws")
    table = posterior_table(trace)
    _posterior_csv(os.path.join(out, "posterior_k.csv"), table)

    lags = np.arange(args.max_lag + 1)
    series = {"K": acf(trace.k, args.max_lag),
              "Kplus": acf(trace.k_plus, args.max_lag),
              "concentration": acf(trace.concentration, args.max_lag)}
    rows = [(int(l),) + tuple(fmt(series[name][l]) for name in ("K", "Kplus", "concentration"))
            for l in lags]
    _write_csv(os.path.join(out, "acf.csv"),
               ["lag", "acf_K", "acf_Kplus", "acf_concentration"], rows)

    summary = table.summary()
    summary["draws"] = int(trace.draws)
    summary["accept_rate"] = trace.accept_rate
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    if not args.no_plots:
        from . import plots
        plots.plot_acf(out, lags, series)
        plots.plot_trace(out, trace)
        plots.plot_count_pmfs(out, table.k_values, table.p_k,
                              table.kplus_values, table.p_kplus,
                              name="posterior_pmfs.png")
    print("wrote %s" % os.path.join(out, "acf.csv"))
    return 0


# ---------------------------------------------------------------- simulate

def cmd_simulate(args):
    out = _out_dir(args, "simulate")
    data, labels = simulate_study_data(args.r, args.n, args.seed)
    header = ["x%d" % (j + 1) for j in range(data.shape[1])]
    _write_csv(os.path.join(out, "data.csv"), header,
               [[fmt(v) for v in row] for row in data])
    _write_csv(os.path.join(out, "labels.csv"), ["observation_id", "label"],
               [(i + 1, int(g)) for i, g in enumerate(labels)])
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump({"software": {"name": "telemix", "version": __version__},
                   "command": "simulate", "r": args.r, "n": args.n,
                   "seed": args.seed}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not args.no_plots:
        from . import plots
        plots.plot_partition(out, data, labels, name="data.png")
    print("wrote %s" % os.path.join(out, "data.csv"))
    return 0


# -------------------------------------------------------------------- main

def build_parser():
    p = argparse.ArgumentParser(prog="telemix",
                                description="Mixtures with an unknown number "
                                            "of components: exact prior tables, "
                                            "posterior sampling, identification.")
    p.add_argument("--version", action="version", version="telemix " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("prior", help="exact pmfs of K and K+")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--prior", help="bnb|poisson|negbin|geometric|uniform|pointmass")
    q.add_argument("--prior-params", help="comma separated parameters")
    q.add_argument("--regime", choices=["static", "dynamic", "dpm", "fixed"],
                   required=True)
    q.add_argument("--gamma", type=float)
    q.add_argument("--alpha", type=float)
    q.add_argument("--kfix", type=int)
    q.add_argument("--out-dir")
    q.add_argument("--no-plots", action="store_true")
    q.set_defaults(func=cmd_prior)

    s = sub.add_parser("sample", help="run the telescoping sampler")
    s.add_argument("--config", help="ini config or an earlier manifest.json")
    s.add_argument("--data")
    s.add_argument("--kernel", help="|".join(sorted(KERNELS)))
    s.add_argument("--prior-k", dest="prior_k")
    s.add_argument("--prior-params")
    s.add_argument("--regime", choices=["static", "dynamic"])
    s.add_argument("--gamma", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--alpha-prior", choices=["f", "gamma"])
    s.add_argument("--alpha-prior-params")
    s.add_argument("--gamma-prior", choices=["f", "gamma"])
    s.add_argument("--gamma-prior-params")
    s.add_argument("--iters", type=int)
    s.add_argument("--burnin", type=int)
    s.add_argument("--thin", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--chains", type=int)
    s.add_argument("--kmax", type=int)
    s.add_argument("--k0", type=int)
    s.add_argument("--mh-step", dest="mh_step", type=float)
    s.add_argument("--no-adapt-mh", dest="adapt_mh", action="store_false",
                   default=None)
    s.add_argument("--out-dir")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_sample)

    i = sub.add_parser("identify", help="relabel draws, extract MAP partition")
    i.add_argument("--run-dir", required=True)
    i.add_argument("--data", help="original data file (for plots / --truth-col)")
    i.add_argument("--truth-col", help="column with reference labels")
    i.add_argument("--out-dir")
    i.add_argument("--no-plots", action="store_true")
    i.set_defaults(func=cmd_identify)

    d = sub.add_parser("diagnose", help="posterior tables and autocorrelations")
    d.add_argument("--run-dir", required=True)
    d.add_argument("--max-lag", type=int, default=100)
    d.add_argument("--out-dir")
    d.add_argument("--no-plots", action="store_true")
    d.set_defaults(func=cmd_diagnose)

    m = sub.add_parser("simulate", help="draw benchmark mixture data")
    m.add_argument("--r", type=int, required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out-dir")
    m.add_argument("--no-plots", action="store_true")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print("runtime failure: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
