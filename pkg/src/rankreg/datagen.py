"""Synthetic regression instances and file ingestion helpers.

Designs draw i.i.d. Gaussian rows with equi-correlated or AR(1)
covariance through O(np) factor forms (no p-by-p square root), signals
cover the group-sparse and elementwise-sparse patterns used by the
benchmark tables, and noise ranges from low-variance Gaussian to
Cauchy. A numeric-CSV reader and a JSON group-file reader support real
data.
"""

import json
import itertools
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.signal import lfilter

from .model import GroupStructure

_DESIGN_RHO = {"C1": 0.3, "C2": 0.9, "C3": 0.5}
_NOISE_STD = {"E1": 0.5, "E2": 1.0, "E3": np.sqrt(2.0)}


@dataclass
class DesignSpec:
    """Design distribution: kind C1 (equi-corr 0.3), C2 (AR(1) 0.9),
    or C3 (equi-corr 0.5), with dimensions n, p."""

    kind: str
    n: int
    p: int

    def __post_init__(self):
        if self.kind not in ("C1", "C2", "C3"):
            raise ValueError("unknown design kind %r" % (self.kind,))
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")


@dataclass
class SignalSpec:
    """True-coefficient pattern.

    S1: active groups filled with sqrt(3). S2: entry j of each active
    group is 2 - (j-1)/4. S3: first k coordinates sqrt(3), k = 3 when
    p <= 8000 and floor(0.001 p) above. S4: leading blocks of values
    2, 1.75, ..., 0.25 with multiplicities 4m, 3m, ..., 3m, m = 1 when
    p <= 8000 and ceil(p/2500) above. active_groups / k / m override
    those protocol defaults when set.
    """

    kind: str
    active_groups: int = None
    k: int = None
    m: int = None

    def __post_init__(self):
        if self.kind not in ("S1", "S2", "S3", "S4"):
            raise ValueError("unknown signal kind %r" % (self.kind,))


@dataclass
class NoiseSpec:
    """Noise law: E1 N(0,0.25), E2 N(0,1), E3 N(0,2),
    E4 0.95 N(0,1) + 0.05 N(0,100), E5 sqrt(2) t_4, E6 Cauchy(0,1)."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("E1", "E2", "E3", "E4", "E5", "E6"):
            raise ValueError("unknown noise kind %r" % (self.kind,))


def gen_design(spec, seed=0):
    """Draw the design matrix; rows i.i.d. N(0, Sigma) for ``spec.kind``.

    ``seed`` may be an int, SeedSequence, or Generator. Equi-correlated
    kinds use the shared-factor form sqrt(1-rho) Z + sqrt(rho) z0 1^T;
    the AR(1) kind runs the column recursion through a linear filter.
    Both are O(np).
    """
    rng = np.random.default_rng(seed)
    n, p = spec.n, spec.p
    rho = _DESIGN_RHO[spec.kind]
    if spec.kind in ("C1", "C3"):
        X = np.sqrt(1.0 - rho) * rng.standard_normal((n, p))
        X += np.sqrt(rho) * rng.standard_normal((n, 1))
        return X
    c = np.sqrt(1.0 - rho * rho)
    E = rng.standard_normal((n, p))
    E[:, 0] /= c
    return lfilter([c], [1.0, -rho], E, axis=1)


def default_signal_groups(kind, p, group_size=20):
    """Group structure the signal protocol assumes for its kind."""
    if kind in ("S1", "S2"):
        return GroupStructure.contiguous(p, group_size)
    return GroupStructure.singletons(p)


def gen_signal(spec, p, G=None):
    """True coefficient vector for the given pattern.

    S1/S2 fill the first m = max(1, round(0.01 g)) groups of G (default
    contiguous groups of 20); S3/S4 are elementwise patterns on the
    leading coordinates and ignore G.
    """
    beta = np.zeros(p)
    if spec.kind in ("S1", "S2"):
        if G is None:
            G = default_signal_groups(spec.kind, p)
        if G.p != p:
            raise ValueError("groups cover %d indices, signal needs %d"
                             % (G.p, p))
        m = spec.active_groups
        if m is None:
            m = max(1, round(0.01 * G.g))
        if m > G.g:
            raise ValueError("cannot activate %d of %d groups" % (m, G.g))
        for l in range(m):
            idx = G.groups[l]
            if spec.kind == "S1":
                beta[idx] = np.sqrt(3.0)
            else:
                j = np.arange(1, idx.size + 1, dtype=float)
                beta[idx] = 2.0 - (j - 1.0) / 4.0
        return beta
    if spec.kind == "S3":
        k = spec.k
        if k is None:
            k = 3 if p <= 8000 else int(np.floor(0.001 * p))
        if k > p:
            raise ValueError("support size %d exceeds p=%d" % (k, p))
        beta[:k] = np.sqrt(3.0)
        return beta
    m = spec.m
    if m is None:
        m = 1 if p <= 8000 else int(np.ceil(p / 2500.0))
    values = np.arange(2.0, 0.2, -0.25)
    mults = [4 * m] + [3 * m] * (values.size - 1)
    if sum(mults) > p:
        raise ValueError("decaying pattern needs %d coordinates, p=%d"
                         % (sum(mults), p))
    beta[:sum(mults)] = np.repeat(values, mults)
    return beta


def gen_noise(spec, n, seed=0):
    """Draw n i.i.d. noise values for the given law."""
    rng = np.random.default_rng(seed)
    if spec.kind in _NOISE_STD:
        return _NOISE_STD[spec.kind] * rng.standard_normal(n)
    if spec.kind == "E4":
        outlier = rng.random(n) < 0.05
        z = rng.standard_normal(n)
        return z * np.where(outlier, 10.0, 1.0)
    if spec.kind == "E5":
        return np.sqrt(2.0) * rng.standard_t(4, size=n)
    return rng.standard_cauchy(n)


def gen_instance(design, signal, noise, groups=None, seed=0):
    """One synthetic instance: returns (X, y, beta_star).

    ``groups`` feeds the signal pattern (S1/S2); draws are taken from a
    single generator in a fixed order, so the instance is a pure
    function of the seed.
    """
    rng = np.random.default_rng(seed)
    X = gen_design(design, rng)
    beta_star = gen_signal(signal, design.p, groups)
    eps = gen_noise(noise, design.n, rng)
    return X, X @ beta_star + eps, beta_star


def polynomial_expand(X, order, max_columns=2_000_000):
    """All monomials of total degree <= order, graded-lexicographic.

    The degree-1 block equals X; no intercept column is produced. The
    output has C(p+order, order) - 1 columns, guarded by max_columns.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    total = comb(p + order, order) - 1
    if total > max_columns:
        raise ValueError(
            "expansion would produce %d columns (limit %d)"
            % (total, max_columns))
    if order == 1:
        return X.copy()
    out = np.empty((n, total))
    col = 0
    for deg in range(1, order + 1):
        for combo in itertools.combinations_with_replacement(range(p), deg):
            prod = X[:, combo[0]].copy()
            for j in combo[1:]:
                prod *= X[:, j]
            out[:, col] = prod
            col += 1
    return out


def read_csv_matrix(path):
    """Rectangular numeric CSV -> 2-d array. One optional header row."""
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    tokens = [t.strip() for t in first.split(",")]
    try:
        [float(t) for t in tokens if t != ""]
    except ValueError:
        skip = 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            M = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise ValueError("%s: %s" % (path, exc)) from None
    if M.size == 0:
        raise ValueError("%s: no numeric rows" % path)
    return M


def read_groups_json(path, weights=None):
    """JSON group file -> GroupStructure.

    Accepts either a bare array of arrays of 1-based column indices or
    an object {"groups": [...], "weights": [...]}. ``weights``
    overrides the file's weights when given.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        raw_groups = doc.get("groups")
        if raw_groups is None:
            raise ValueError("%s: missing 'groups' key" % path)
        if weights is None:
            weights = doc.get("weights")
    else:
        raw_groups = doc
    groups = []
    for l, g in enumerate(raw_groups):
        idx = np.asarray(g, dtype=np.intp)
        if idx.size and idx.min() < 1:
            raise ValueError(
                "%s: group %d uses index %d; indices are 1-based"
                % (path, l, int(idx.min())))
        groups.append(idx - 1)
    return GroupStructure(groups, weights=weights)
