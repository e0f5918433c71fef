"""Data ingestion, run artifacts, and configuration handling.

A run directory holds trace.csv (iteration, K, Kplus, concentration,
accept_flag), alloc.bin (allocation matrix with a 16-byte header),
params.npz (relabeling features and the raw trace vectors) and
manifest.json with the fully resolved configuration. The manifest can
be fed back in place of a config file and reproduces the run bit for
bit.
"""

import configparser
import csv
import json
import os
import struct

import numpy as np

from . import __version__
from .datasets import file_sha256
from .priors import ComponentCountPrior, ConcentrationSpec, Hyperprior
from .sampler import SamplerConfig, SamplerTrace

ALLOC_MAGIC = b"MFMA"
ALLOC_VERSION = 1
OUT_ENV = "TELEMIX_OUT_ROOT"


class ConfigError(ValueError):
    """Bad flags or config values; CLI exit code 2."""


class DataError(ValueError):
    """Missing or malformed data; CLI exit code 3."""


def fmt(x):
    """Lossless float formatting for CSV output."""
    return "%.17g" % x


def default_out_root():
    return os.environ.get(OUT_ENV, "runs")


# ---------------------------------------------------------------- ingestion

def _parse_cell(cell, row, col, kind):
    try:
        return kind(cell)
    except ValueError:
        raise DataError("row %d, column %d: could not parse %r as %s"
                        % (row, col, cell, kind.__name__))


def ingest_csv(path, kernel_tag):
    """Read a data file for the given kernel.

    Gaussian kernels expect numeric columns (an optional non-numeric
    header row is skipped); the latent class kernel expects a first line
    with the per-variable category counts followed by 1-based integer
    codes. Returns (data, info) where info carries shape, categories and
    the file hash.
    """
    if not os.path.exists(path):
        raise DataError("data file not found: %s" % path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError("%s: empty file" % path)

    info = {"path": os.path.abspath(path), "sha256": file_sha256(path)}

    if kernel_tag == "lca":
        try:
            cats = [int(c) for c in rows[0]]
        except ValueError:
            raise DataError("%s: first line must hold the category counts" % path)
        if len(rows) < 2:
            raise DataError("%s: no data rows after the category header" % path)
        width = len(cats)
        data = np.empty((len(rows) - 1, width), dtype=np.int64)
        for i, r in enumerate(rows[1:], start=2):
            if len(r) != width:
                raise DataError("row %d: expected %d columns, got %d"
                                % (i, width, len(r)))
            for j, cell in enumerate(r):
                code = _parse_cell(cell.strip(), i, j + 1, int)
                if not 1 <= code <= cats[j]:
                    raise DataError("row %d, column %d: category code %d "
                                    "outside 1..%d" % (i, j + 1, code, cats[j]))
                data[i - 2, j] = code - 1
        info.update(n=data.shape[0], columns=width, categories=cats)
        return data, info

    # numeric matrix; tolerate one header row
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    if start == len(rows):
        raise DataError("%s: no data rows" % path)
    width = len(rows[start])
    data = np.empty((len(rows) - start, width))
    for i, r in enumerate(rows[start:], start=start + 1):
        if len(r) != width:
            raise DataError("row %d: expected %d columns, got %d"
                            % (i, width, len(r)))
        for j, cell in enumerate(r):
            data[i - start - 1, j] = _parse_cell(cell.strip(), i, j + 1, float)
    if kernel_tag == "uvn-rg":
        if width != 1:
            raise DataError("%s: univariate kernel expects one column, got %d"
                            % (path, width))
        data = data[:, 0]
    info.update(n=data.shape[0], columns=width)
    return data, info


def simulate_study_data(r, n, seed):
    """Artificial data from the eight-component Gaussian benchmark mixture.

    Base means are the full factorial {2,6,10,14} x {0,5}; for r > 2 the
    two coordinates are tiled r/2 times and rescaled by 1/sqrt(r/2) so
    the pairwise Euclidean distances between the mean vectors do not
    change with dimension. Unit covariances, equal weights.
    """
    r = int(r)
    n = int(n)
    if r < 2 or r % 2 != 0:
        raise ConfigError("dimension r must be a positive even number")
    if n < 8:
        raise ConfigError("need at least 8 observations")
    base = np.array([[a, b] for a in (2.0, 6.0, 10.0, 14.0) for b in (0.0, 5.0)])
    reps = r // 2
    means = np.tile(base, (1, reps)) / np.sqrt(reps)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    labels = rng.integers(0, 8, size=n)
    data = means[labels] + rng.standard_normal((n, r))
    return data, labels + 1


# ---------------------------------------------------------------- artifacts

def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "K", "Kplus", "concentration", "accept_flag"])
        first = trace.burn_in + 1
        for i in range(trace.draws):
            w.writerow([first + i * trace.thin, trace.k[i], trace.k_plus[i],
                        fmt(trace.concentration[i]), trace.accept[i]])


def read_trace_csv(path):
    body = np.genfromtxt(path, delimiter=",", skip_header=1)
    body = np.atleast_2d(body)
    return {"iteration": body[:, 0].astype(np.int64),
            "k": body[:, 1].astype(np.int64),
            "k_plus": body[:, 2].astype(np.int64),
            "concentration": body[:, 3],
            "accept": body[:, 4].astype(np.int8)}


def write_alloc_bin(path, trace):
    """Row-major uint16 allocation matrix, 1-based, 16-byte header."""
    rows, n = trace.alloc.shape
    with open(path, "wb") as fh:
        fh.write(ALLOC_MAGIC)
        fh.write(struct.pack("<III", ALLOC_VERSION, n, rows))
        (trace.alloc.astype("<u2") + 1).tofile(fh)


def read_alloc_bin(path):
    """Returns the 0-based allocation matrix."""
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != ALLOC_MAGIC:
            raise DataError("%s is not an allocation file" % path)
        version, n, rows = struct.unpack("<III", head[4:])
        if version != ALLOC_VERSION:
            raise DataError("%s: unsupported allocation format v%d" % (path, version))
        body = np.fromfile(fh, dtype="<u2", count=rows * n)
    if body.size != rows * n:
        raise DataError("%s: truncated payload" % path)
    return body.reshape(rows, n).astype(np.uint16) - 1


def save_run(out_dir, trace, manifest):
    os.makedirs(out_dir, exist_ok=True)
    write_trace_csv(os.path.join(out_dir, "trace.csv"), trace)
    write_alloc_bin(os.path.join(out_dir, "alloc.bin"), trace)
    np.savez(os.path.join(out_dir, "params.npz"),
             features=trace.features, k=trace.k, k_plus=trace.k_plus,
             concentration=trace.concentration, accept=trace.accept,
             n=trace.n, kernel_tag=trace.kernel_tag, mode=trace.mode,
             burn_in=trace.burn_in, thin=trace.thin, seed=trace.seed)
    manifest = dict(manifest)
    manifest["outputs"] = {"trace": "trace.csv", "allocations": "alloc.bin",
                           "parameters": "params.npz"}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_run(run_dir):
    """Rebuild a SamplerTrace from a run directory."""
    pz = np.load(os.path.join(run_dir, "params.npz"))
    alloc = read_alloc_bin(os.path.join(run_dir, "alloc.bin"))
    meta = {}
    mpath = os.path.join(run_dir, "manifest.json")
    if os.path.exists(mpath):
        with open(mpath) as fh:
            meta = json.load(fh)
    return SamplerTrace(
        k=pz["k"], k_plus=pz["k_plus"], concentration=pz["concentration"],
        accept=pz["accept"], alloc=alloc, features=pz["features"],
        n=int(pz["n"]), kernel_tag=str(pz["kernel_tag"]), mode=str(pz["mode"]),
        burn_in=int(pz["burn_in"]), thin=int(pz["thin"]), seed=int(pz["seed"]),
        meta=meta)


# ------------------------------------------------------------- configuration

def parse_prior(family, params):
    """Build a ComponentCountPrior from a family tag and parameter list."""
    family = family.lower()
    try:
        if family == "bnb":
            return ComponentCountPrior.bnb(*params)
        if family == "poisson":
            return ComponentCountPrior.poisson(*params)
        if family == "negbin":
            return ComponentCountPrior.negbin(*params)
        if family == "geometric":
            return ComponentCountPrior.geometric(*params)
        if family == "uniform":
            return ComponentCountPrior.uniform(int(params[0]))
        if family == "pointmass":
            return ComponentCountPrior.pointmass(int(params[0]))
    except (TypeError, ValueError) as exc:
        raise ConfigError("invalid %s prior parameters %r: %s"
                          % (family, params, exc))
    raise ConfigError("unknown component-count prior family %r" % family)


def parse_concentration(regime, value=None, hyper_kind=None, hyper_params=None):
    if regime not in ("static", "dynamic"):
        raise ConfigError("regime must be 'static' or 'dynamic', got %r" % regime)
    try:
        if hyper_kind is not None:
            hp = Hyperprior(hyper_kind, hyper_params)
            return ConcentrationSpec(regime, hyperprior=hp)
        if value is None:
            raise ConfigError("give a fixed concentration or a hyperprior")
        return ConcentrationSpec(regime, value=float(value))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def load_config_file(path):
    """Flat dict of config keys from an ini file or a manifest.json."""
    if not os.path.exists(path):
        raise ConfigError("config file not found: %s" % path)
    if path.endswith(".json"):
        with open(path) as fh:
            m = json.load(fh)
        out = {
            "data": m["data"]["path"], "kernel": m["data"]["kernel"],
            "prior_k": m["model"]["prior_k"]["family"],
            "prior_params": " ".join(fmt(v) for v in m["model"]["prior_k"]["params"]),
            "regime": m["model"]["concentration"]["mode"],
            "iters": m["sampler"]["iterations"], "burnin": m["sampler"]["burn_in"],
            "thin": m["sampler"]["thin"], "kmax": m["sampler"]["k_max"],
            "k0": m["sampler"]["k_init"], "mh_step": m["sampler"]["mh_step"],
            "adapt_mh": m["sampler"]["adapt_mh"],
            "seed": m["seed"], "chains": m.get("chains", 1),
        }
        conc = m["model"]["concentration"]
        if "value" in conc:
            key = "gamma" if conc["mode"] == "static" else "alpha"
            out[key] = conc["value"]
        else:
            key = "gamma_prior" if conc["mode"] == "static" else "alpha_prior"
            out[key] = conc["hyperprior"]["kind"]
            out[key + "_params"] = " ".join(fmt(v) for v in conc["hyperprior"]["params"])
        return out

    ini = configparser.ConfigParser()
    try:
        ini.read(path)
    except configparser.Error as exc:
        raise ConfigError("cannot parse %s: %s" % (path, exc))
    out = {}
    for section in ini.sections():
        for key, value in ini.items(section):
            out[key.replace("-", "_")] = value
    return out


def build_manifest(command, info, kernel, prior, spec, cfg, chains, base_seed):
    return {
        "software": {"name": "telemix", "version": __version__},
        "command": command,
        "seed": base_seed,
        "chains": chains,
        "data": {"path": info.get("path"), "sha256": info.get("sha256"),
                 "n": info.get("n"), "kernel": kernel.tag,
                 "constants": _jsonable(kernel.data_constants())},
        "model": {"prior_k": prior.describe(),
                  "concentration": spec.describe()},
        "sampler": {"iterations": cfg.iterations, "burn_in": cfg.burn_in,
                    "thin": cfg.thin, "k_max": cfg.k_max, "k_init": cfg.k_init,
                    "mh_step": cfg.mh_step, "adapt_mh": cfg.adapt_mh,
                    "seed": cfg.seed},
        "truncation": {"k_max": cfg.k_max,
                       "residual_prior_mass": prior.tail_mass(cfg.k_max)},
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
