"""Benchmark dataset registry: expected shapes, loaders, fetch help.

The three standard benchmark tables are not redistributed here. Each
entry records the structural fingerprint the loader enforces (row
count, columns, category layout) and step-by-step instructions for
obtaining the file. Loaded files are hashed so the manifest pins the
exact bytes a run saw.
"""

import hashlib
import os

import numpy as np

DATA_ENV = "TELEMIX_DATA_DIR"

FETCH_NOTES = {
    "galaxy": """\
galaxy.csv: one numeric column named 'velocity', 82 rows, unit 1000 km/s.
Velocities of 82 galaxies in the Corona Borealis region.
Obtain either from the R package MASS:
    R -e 'write.csv(data.frame(velocity=MASS::galaxies/1000),
                    "galaxy.csv", row.names=FALSE)'
or transcribe Table 1 of Roeder (JASA 1990) and divide by 1000. Note the
MASS copy differs from the printed table in one velocity (26960 vs
26690); most published posterior tables use the MASS values.""",
    "thyroid": """\
thyroid.csv: 215 rows, columns T3resin,Thyroxin,T3,TSH,TSHdiff,diagnosis.
The 'new-thyroid' table from the UCI Machine Learning Repository
(https://archive.ics.uci.edu/dataset/102/thyroid+disease, file
new-thyroid.data). Column 1 there is the diagnosis (1=normal n=150,
2=hyper n=35, 3=hypo n=30); move it to the last column, add the header
above, keep the five lab measurements in their original order.""",
    "fear": """\
fear.csv: 93 rows, header '4,3,3', then three integer columns M,C,F
with categories 1..4, 1..3, 1..3 (motor activity, fret/cry, fear of
unfamiliar events). Expand the published 4x3x3 contingency table of the
infant temperament study of Stern, Arcus, Kagan, Rubin and Snidman
(1994) into one row per child; the table is reprinted in work on sparse
finite mixtures for latent class analysis.""",
}


def data_dir():
    return os.environ.get(DATA_ENV, os.path.join(os.getcwd(), "data"))


def dataset_path(name):
    if name not in FETCH_NOTES:
        raise KeyError("unknown dataset %r" % name)
    return os.path.join(data_dir(), name + ".csv")


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _require(cond, name, msg):
    if not cond:
        raise ValueError("%s.csv failed validation: %s" % (name, msg))


def load_galaxy(path=None):
    """82 galaxy velocities (1000 km/s) as a float vector."""
    path = path or dataset_path("galaxy")
    if not os.path.exists(path):
        raise FileNotFoundError("galaxy data not found at %s\n\n%s"
                                % (path, FETCH_NOTES["galaxy"]))
    y = np.genfromtxt(path, delimiter=",", skip_header=1)
    _require(y.ndim == 1 and y.shape[0] == 82, "galaxy", "expected 82 rows, one column")
    _require(np.all(np.isfinite(y)), "galaxy", "non-numeric cells")
    _require(5.0 < y.min() and y.max() < 40.0, "galaxy",
             "values outside the 1000 km/s velocity scale")
    return y, file_sha256(path)


def load_thyroid(path=None):
    """(measurements (215, 5), diagnosis labels (215,), sha256)."""
    path = path or dataset_path("thyroid")
    if not os.path.exists(path):
        raise FileNotFoundError("thyroid data not found at %s\n\n%s"
                                % (path, FETCH_NOTES["thyroid"]))
    m = np.genfromtxt(path, delimiter=",", skip_header=1)
    _require(m.ndim == 2 and m.shape == (215, 6), "thyroid",
             "expected 215 rows, 5 measurements + diagnosis")
    _require(np.all(np.isfinite(m)), "thyroid", "non-numeric cells")
    labels = m[:, 5].astype(np.int64)
    _require(sorted(np.unique(labels).tolist()) == [1, 2, 3], "thyroid",
             "diagnosis codes must be 1, 2, 3")
    counts = np.bincount(labels)[1:]
    _require(sorted(counts.tolist()) == [30, 35, 150], "thyroid",
             "diagnosis group sizes must be 150/35/30")
    return m[:, :5], labels, file_sha256(path)


def load_fear(path=None):
    """(category codes (93, 3) zero-based, category counts, sha256)."""
    path = path or dataset_path("fear")
    if not os.path.exists(path):
        raise FileNotFoundError("fear data not found at %s\n\n%s"
                                % (path, FETCH_NOTES["fear"]))
    with open(path) as fh:
        header = fh.readline().strip()
    cats = np.array([int(t) for t in header.split(",")])
    _require(cats.tolist() == [4, 3, 3], "fear", "header must be 4,3,3")
    codes = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=np.int64)
    _require(codes.ndim == 2 and codes.shape == (93, 3), "fear",
             "expected 93 rows, three columns")
    _require(np.all(codes >= 1) and np.all(codes <= cats[None, :]), "fear",
             "category codes out of range")
    return codes - 1, cats, file_sha256(path)
