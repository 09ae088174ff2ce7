"""Joint distributions with sample access and exact discrete enumeration.

Every model here is a finite-support joint law on R^n exposing two views:

* sampling (``sample`` / ``sample_many``) against a numpy ``Generator``, and
* exact enumeration (``support_chunks`` / ``sum_support``) used by
  ``exact_moment``, ``exact_tail`` and ``certify_moments``.

Enumeration is only permitted while the support has at most ``atom_cap``
atoms; larger models stay usable for sampling but exact operations raise
``SupportTooLargeError`` up front instead of grinding forever.  Atoms are
always visited in a fixed order, so exact results are bit-reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .entropy_core import BoundParams
from .errors import SubsetBudgetError, SupportTooLargeError, ValidationError

DEFAULT_ATOM_CAP = 10**6
DEFAULT_SUBSET_BUDGET = 10**6
DEFAULT_CHUNK = 1 << 16

# Slack for comparing a moment against its certified product, for deciding
# whether an atom's sum clears the tail threshold, and for range checks.
MOMENT_TOL = 1e-12
TAIL_TIE_TOL = 1e-12
BOUND_RANGE_TOL = 1e-12

PROB_SUM_TOL = 1e-9

MODEL_KINDS = (
    "independent",
    "boolean_iid",
    "planted_clique",
    "exchangeable_mixture",
    "explicit_table",
)

__all__ = [
    "DEFAULT_ATOM_CAP",
    "DEFAULT_SUBSET_BUDGET",
    "MODEL_KINDS",
    "JointModel",
    "IndependentModel",
    "BooleanIIDModel",
    "PlantedCliqueModel",
    "ExchangeableMixtureModel",
    "ExplicitTableModel",
    "MomentCertificate",
    "model_from_spec",
    "sample",
    "exact_moment",
    "exact_tail",
    "certify_moments",
    "check_support_range",
]


def _validate_atoms(atoms, name: str) -> tuple[np.ndarray, np.ndarray]:
    """Check one discrete marginal given as (value, probability) pairs."""
    try:
        pairs = [(float(v), float(p)) for v, p in atoms]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be a list of [value, prob] pairs") from exc
    if not pairs:
        raise ValidationError(f"{name} must contain at least one atom")
    values = np.array([v for v, _ in pairs], dtype=np.float64)
    probs = np.array([p for _, p in pairs], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{name} has non-finite values")
    if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
        raise ValidationError(f"{name} has negative or non-finite probabilities")
    total = float(probs.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"{name} probabilities sum to {total}, expected 1")
    return values, probs


class JointModel:
    """Base class: a joint law on R^n with sampling and exact enumeration."""

    kind = "abstract"

    def __init__(self, n: int, atom_cap: int = DEFAULT_ATOM_CAP):
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"n must be a positive integer, got {n!r}")
        if not isinstance(atom_cap, int) or atom_cap < 1:
            raise ValidationError(f"atom_cap must be a positive integer, got {atom_cap!r}")
        self._n = n
        self._atom_cap = atom_cap
        self._sum_cache: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n(self) -> int:
        return self._n

    @property
    def atom_cap(self) -> int:
        return self._atom_cap

    @property
    def enumerable(self) -> bool:
        return self.support_size() <= self._atom_cap

    def support_size(self) -> int:
        raise NotImplementedError

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` joint vectors, shape (size, n), dtype float64."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_many(rng, 1)[0]

    def support_chunks(
        self, columns: Sequence[int] | None = None, chunk_size: int = DEFAULT_CHUNK
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (values, probs) over the whole support in a fixed order.

        ``values`` has one column per entry of ``columns`` (all n variables
        when omitted).  Probabilities are always the full atom probabilities
        regardless of the column selection.
        """
        raise NotImplementedError

    def support(self) -> Iterator[tuple[np.ndarray, float]]:
        """Atom-by-atom view, mainly for tests and tiny models."""
        for values, probs in self.support_chunks():
            for row, p in zip(values, probs):
                yield row.copy(), float(p)

    def _require_enumerable(self, what: str) -> None:
        size = self.support_size()
        if size > self._atom_cap:
            raise SupportTooLargeError(
                f"{what} needs exact enumeration, but this {self.kind} model has "
                f"{size} atoms (atom_cap={self._atom_cap}); use sampling instead "
                f"or raise atom_cap"
            )

    def sum_support(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact distribution of the coordinate sum: (sums, probs) arrays.

        Entries follow the same atom order as ``support_chunks`` and the
        result is cached on the model.
        """
        if self._sum_cache is None:
            self._require_enumerable("sum_support")
            self._sum_cache = self._build_sum_support()
        return self._sum_cache

    def _build_sum_support(self) -> tuple[np.ndarray, np.ndarray]:
        size = self.support_size()
        sums = np.empty(size, dtype=np.float64)
        probs = np.empty(size, dtype=np.float64)
        pos = 0
        for values, p in self.support_chunks():
            m = len(p)
            sums[pos : pos + m] = values.sum(axis=1)
            probs[pos : pos + m] = p
            pos += m
        return sums, probs

    def _check_columns(self, columns: Sequence[int] | None) -> tuple[int, ...]:
        if columns is None:
            return tuple(range(self._n))
        cols = tuple(int(i) for i in columns)
        if any(i < 0 or i >= self._n for i in cols):
            raise ValidationError(f"column indices must lie in [0, {self._n}), got {cols}")
        if len(set(cols)) != len(cols):
            raise ValidationError(f"column indices must be distinct, got {cols}")
        return cols


class _FactoredModel(JointModel):
    """Shared machinery for laws that factor into independent discrete factors.

    Variable i reads its value off factor ``vmap[i]``; several variables may
    share a factor (that is how the planted construction couples a block).
    Atom order is mixed-radix with factor 0 most significant.
    """

    def __init__(
        self,
        n: int,
        factor_values: Sequence[np.ndarray],
        factor_probs: Sequence[np.ndarray],
        vmap: Sequence[int],
        atom_cap: int = DEFAULT_ATOM_CAP,
    ):
        super().__init__(n, atom_cap)
        self._fvals = [np.asarray(v, dtype=np.float64) for v in factor_values]
        self._fprobs = [np.asarray(p, dtype=np.float64) for p in factor_probs]
        self._vmap = np.asarray(vmap, dtype=np.int64)
        if len(self._vmap) != n:
            raise ValidationError("vmap must assign a factor to each variable")
        self._sizes = [len(v) for v in self._fvals]
        # stride[j] = number of atoms spanned by one step of factor j
        strides = []
        acc = 1
        for size in reversed(self._sizes):
            strides.append(acc)
            acc *= size
        self._strides = list(reversed(strides))
        self._total = acc

    def support_size(self) -> int:
        return self._total

    def _digits(self, idx: np.ndarray, j: int) -> np.ndarray:
        return (idx // self._strides[j]) % self._sizes[j]

    def support_chunks(
        self, columns: Sequence[int] | None = None, chunk_size: int = DEFAULT_CHUNK
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        cols = self._check_columns(columns)
        total = self._total
        for start in range(0, total, chunk_size):
            idx = np.arange(start, min(start + chunk_size, total), dtype=np.int64)
            digits = {j: self._digits(idx, j) for j in range(len(self._fvals))}
            probs = np.ones(len(idx), dtype=np.float64)
            for j, fp in enumerate(self._fprobs):
                probs *= fp[digits[j]]
            values = np.empty((len(idx), len(cols)), dtype=np.float64)
            for k, i in enumerate(cols):
                j = int(self._vmap[i])
                values[:, k] = self._fvals[j][digits[j]]
            yield values, probs

    def _build_sum_support(self) -> tuple[np.ndarray, np.ndarray]:
        # Expand factor by factor; vars sharing a factor contribute a multiple
        # of its value.  This is O(total) rather than O(total * n).
        mult = np.bincount(self._vmap, minlength=len(self._fvals))
        sums = np.zeros(1, dtype=np.float64)
        probs = np.ones(1, dtype=np.float64)
        for j, (fv, fp) in enumerate(zip(self._fvals, self._fprobs)):
            sums = (sums[:, None] + mult[j] * fv[None, :]).ravel()
            probs = (probs[:, None] * fp[None, :]).ravel()
        return sums, probs

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        draws = [
            rng.choice(len(fv), size=size, p=fp)
            for fv, fp in zip(self._fvals, self._fprobs)
        ]
        out = np.empty((size, self._n), dtype=np.float64)
        for i in range(self._n):
            j = int(self._vmap[i])
            out[:, i] = self._fvals[j][draws[j]]
        return out


class IndependentModel(_FactoredModel):
    """Independent variables with arbitrary finite marginals."""

    kind = "independent"

    def __init__(self, marginals: Sequence, atom_cap: int = DEFAULT_ATOM_CAP):
        n = len(marginals)
        if n < 1:
            raise ValidationError("need at least one marginal")
        values, probs = [], []
        for i, marg in enumerate(marginals):
            v, p = _validate_atoms(marg, f"marginals[{i}]")
            values.append(v)
            probs.append(p)
        super().__init__(n, values, probs, vmap=range(n), atom_cap=atom_cap)
        self.marginals = [
            [(float(v), float(p)) for v, p in zip(vals, ps)]
            for vals, ps in zip(values, probs)
        ]


class BooleanIIDModel(_FactoredModel):
    """n i.i.d. Bernoulli(p) variables on {0, 1}."""

    kind = "boolean_iid"

    def __init__(self, n: int, p: float, atom_cap: int = DEFAULT_ATOM_CAP):
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {p}")
        values = np.array([0.0, 1.0])
        probs = np.array([1.0 - p, p])
        super().__init__(n, [values] * n, [probs] * n, vmap=range(n), atom_cap=atom_cap)
        self.p = p

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return (rng.random((size, self._n)) < self.p).astype(np.float64)


class PlantedCliqueModel(JointModel):
    """Bernoulli(p) variables where a planted index block shares one coin.

    Variables inside the block are perfectly correlated (they all copy a
    single Bernoulli(p) draw); the rest are independent Bernoulli(p).  The
    product moment over a subset S with j block members is p^(1 + |S| - j)
    for j >= 1, which exceeds p^|S| as soon as j >= 2, so any c_i < p^(1/j)
    certificate fails on the block while c_i = p^(1/k) certifies everything.
    """

    kind = "planted_clique"

    def __init__(
        self,
        n: int,
        p: float,
        k: int | None = None,
        indices: Sequence[int] | None = None,
        atom_cap: int = DEFAULT_ATOM_CAP,
    ):
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {p}")
        if indices is None:
            if k is None:
                raise ValidationError("planted_clique needs k or indices")
            if not isinstance(k, int) or not 1 <= k <= n:
                raise ValidationError(f"k must be an integer in [1, n], got {k!r}")
            indices = tuple(range(k))
        indices = tuple(int(i) for i in indices)
        if not indices or len(set(indices)) != len(indices):
            raise ValidationError(f"indices must be non-empty and distinct, got {indices}")
        if any(i < 0 or i >= n for i in indices):
            raise ValidationError(f"indices must lie in [0, n), got {indices}")
        super().__init__(n, atom_cap)
        self.p = p
        self.indices = tuple(sorted(indices))
        self.k = len(self.indices)
        free = tuple(i for i in range(n) if i not in set(self.indices))
        vmap = np.empty(n, dtype=np.int64)
        vmap[list(self.indices)] = 0
        for pos, i in enumerate(free):
            vmap[i] = pos + 1
        values = np.array([0.0, 1.0])
        probs = np.array([1.0 - p, p])
        self._free = free
        self._inner = _FactoredModel(
            n, [values] * (1 + len(free)), [probs] * (1 + len(free)), vmap, atom_cap
        )

    def support_size(self) -> int:
        return self._inner.support_size()

    def support_chunks(self, columns=None, chunk_size=DEFAULT_CHUNK):
        self._check_columns(columns)
        return self._inner.support_chunks(columns, chunk_size)

    def _build_sum_support(self):
        return self._inner._build_sum_support()

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        shared = (rng.random(size) < self.p).astype(np.float64)
        free = (rng.random((size, len(self._free))) < self.p).astype(np.float64)
        out = np.empty((size, self._n), dtype=np.float64)
        out[:, list(self.indices)] = shared[:, None]
        if self._free:
            out[:, list(self._free)] = free
        return out


class ExchangeableMixtureModel(JointModel):
    """Mixture: with probability rho all variables copy one draw from the
    marginal, otherwise all n are drawn independently from that marginal."""

    kind = "exchangeable_mixture"

    def __init__(self, n: int, rho: float, atoms: Sequence, atom_cap: int = DEFAULT_ATOM_CAP):
        rho = float(rho)
        if not 0.0 <= rho <= 1.0:
            raise ValidationError(f"rho must lie in [0, 1], got {rho}")
        values, probs = _validate_atoms(atoms, "atoms")
        super().__init__(n, atom_cap)
        self.rho = rho
        self._values = values
        self._probs = probs
        self._inner = IndependentModel(
            [list(zip(values, probs))] * n, atom_cap=max(atom_cap, len(values) ** n)
        )

    @classmethod
    def bernoulli(
        cls, n: int, rho: float, p: float, atom_cap: int = DEFAULT_ATOM_CAP
    ) -> "ExchangeableMixtureModel":
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {p}")
        return cls(n, rho, [(0.0, 1.0 - p), (1.0, p)], atom_cap=atom_cap)

    def support_size(self) -> int:
        m = len(self._values)
        return m + m**self._n

    def support_chunks(self, columns=None, chunk_size=DEFAULT_CHUNK):
        cols = self._check_columns(columns)

        def _chunks():
            shared = np.repeat(self._values[:, None], len(cols), axis=1)
            yield shared, self.rho * self._probs
            for values, probs in self._inner.support_chunks(cols, chunk_size):
                yield values, (1.0 - self.rho) * probs

        return _chunks()

    def _build_sum_support(self):
        ind_sums, ind_probs = self._inner._build_sum_support()
        sums = np.concatenate([self._n * self._values, ind_sums])
        probs = np.concatenate([self.rho * self._probs, (1.0 - self.rho) * ind_probs])
        return sums, probs

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        mix = rng.random(size) < self.rho
        shared = rng.choice(len(self._values), size=size, p=self._probs)
        indep = rng.choice(len(self._values), size=(size, self._n), p=self._probs)
        out = np.where(
            mix[:, None], self._values[shared][:, None], self._values[indep]
        )
        return out.astype(np.float64)


class ExplicitTableModel(JointModel):
    """Joint law given directly as a table of (vector, probability) atoms."""

    kind = "explicit_table"

    def __init__(self, atoms: Sequence, atom_cap: int = DEFAULT_ATOM_CAP):
        rows = []
        probs = []
        for entry in atoms:
            try:
                vec, p = entry
                rows.append([float(v) for v in vec])
                probs.append(float(p))
            except (TypeError, ValueError) as exc:
                raise ValidationError(
                    "explicit_table atoms must be (vector, probability) pairs"
                ) from exc
        if not rows:
            raise ValidationError("explicit_table needs at least one atom")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValidationError(f"atom vectors have inconsistent lengths {sorted(widths)}")
        super().__init__(widths.pop(), atom_cap)
        self._X = np.array(rows, dtype=np.float64)
        self._p = np.array(probs, dtype=np.float64)
        if not np.all(np.isfinite(self._X)):
            raise ValidationError("explicit_table has non-finite values")
        if np.any(self._p < 0.0) or not np.all(np.isfinite(self._p)):
            raise ValidationError("explicit_table has negative or non-finite probabilities")
        total = float(self._p.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"explicit_table probabilities sum to {total}, expected 1")
        if len(self._p) > atom_cap:
            raise ValidationError(
                f"explicit_table has {len(self._p)} atoms, exceeding atom_cap={atom_cap}"
            )

    def support_size(self) -> int:
        return len(self._p)

    def support_chunks(self, columns=None, chunk_size=DEFAULT_CHUNK):
        cols = list(self._check_columns(columns))

        def _chunks():
            for start in range(0, len(self._p), chunk_size):
                stop = min(start + chunk_size, len(self._p))
                yield self._X[start:stop, cols], self._p[start:stop]

        return _chunks()

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self._p), size=size, p=self._p)
        return self._X[idx]


@dataclass(frozen=True)
class MomentCertificate:
    """Comparison of one subset's exact product moment against prod c_i."""

    subset: tuple[int, ...]
    exact_moment: float
    bound_product: float

    @property
    def satisfied(self) -> bool:
        return self.exact_moment <= self.bound_product + MOMENT_TOL


def sample(model: JointModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw one vector (size None) or a (size, n) batch from the model."""
    if size is None:
        return model.sample(rng)
    if not isinstance(size, int) or size < 1:
        raise ValidationError(f"size must be a positive integer, got {size!r}")
    return model.sample_many(rng, size)


def exact_moment(model: JointModel, subset: Iterable[int]) -> float:
    """Exact E[prod_{i in subset} X_i] by enumeration; empty subset gives 1."""
    cols = tuple(sorted(model._check_columns(tuple(subset))))
    if not cols:
        return 1.0
    model._require_enumerable("exact_moment")
    total = 0.0
    for values, probs in model.support_chunks(columns=cols):
        total += float(probs @ np.prod(values, axis=1))
    return total


def exact_tail(model: JointModel, threshold: float) -> float:
    """Exact P(sum of coordinates >= threshold) by enumeration.

    Atoms whose sum falls within a relative 1e-12 of the threshold count as
    meeting it, so thresholds that are exact in real arithmetic are not lost
    to rounding.
    """
    threshold = float(threshold)
    if not math.isfinite(threshold):
        raise ValidationError(f"threshold must be finite, got {threshold!r}")
    sums, probs = model.sum_support()
    cutoff = threshold - TAIL_TIE_TOL * max(1.0, abs(threshold))
    mass = float(probs[sums >= cutoff].sum())
    return min(1.0, max(0.0, mass))


def certify_moments(
    model: JointModel,
    params: BoundParams,
    max_subset_size: int | None = None,
    subset_budget: int = DEFAULT_SUBSET_BUDGET,
) -> list[MomentCertificate]:
    """Exact check of E[prod_{i in S} X_i] <= prod_{i in S} c_i over subsets.

    Covers every subset of size up to ``max_subset_size`` (all n when
    omitted) in deterministic order: by size, lexicographic within a size.
    Raises ``SubsetBudgetError`` before doing any work if that would exceed
    ``subset_budget`` subsets.  Cost grows as (#subsets x #atoms); intended
    for small n.
    """
    if params.n != model.n:
        raise ValidationError(f"params.n={params.n} does not match model n={model.n}")
    max_size = model.n if max_subset_size is None else int(max_subset_size)
    if not 0 <= max_size <= model.n:
        raise ValidationError(f"max_subset_size must lie in [0, n], got {max_size}")
    count = sum(math.comb(model.n, k) for k in range(max_size + 1))
    if count > subset_budget:
        raise SubsetBudgetError(
            f"certifying subsets up to size {max_size} of n={model.n} needs {count} "
            f"subsets, exceeding subset_budget={subset_budget}"
        )
    model._require_enumerable("certify_moments")
    out = []
    for size in range(max_size + 1):
        for subset in itertools.combinations(range(model.n), size):
            moment = exact_moment(model, subset)
            product = float(np.prod([params.c[i] for i in subset])) if subset else 1.0
            out.append(MomentCertificate(subset=subset, exact_moment=moment, bound_product=product))
    return out


def check_support_range(model: JointModel, params: BoundParams) -> None:
    """Raise unless every positive-probability atom lies in [a_i, a_i + b]."""
    if params.n != model.n:
        raise ValidationError(f"params.n={params.n} does not match model n={model.n}")
    model._require_enumerable("check_support_range")
    lo = np.array(params.a) - BOUND_RANGE_TOL * max(1.0, params.b)
    hi = np.array(params.a) + params.b + BOUND_RANGE_TOL * max(1.0, params.b)
    for values, probs in model.support_chunks():
        live = probs > 0.0
        if not live.any():
            continue
        block = values[live]
        bad = (block < lo) | (block > hi)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise ValidationError(
                f"model support leaves [a_i, a_i+b]: variable {col} takes value "
                f"{block[row, col]} outside [{params.a[col]}, {params.a[col] + params.b}]"
            )


def _require(doc: dict, key: str, kind: str):
    if key not in doc:
        raise ValidationError(f"model spec of kind {kind!r} is missing {key!r}")
    return doc[key]


def model_from_spec(doc: dict, atom_cap: int | None = None) -> JointModel:
    """Build a model from its JSON-style description.

    Expected shape: {"kind": ..., "n": ..., "params": {...}}, where
    explicit_table carries its atoms as params["support"], a list of
    {"x": [...], "p": ...} objects (bare [vector, p] pairs also accepted).
    """
    if not isinstance(doc, dict):
        raise ValidationError(f"model spec must be an object, got {type(doc).__name__}")
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise ValidationError(
            f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}"
        )
    cap = DEFAULT_ATOM_CAP if atom_cap is None else int(atom_cap)
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("model spec 'params' must be an object")

    if kind == "explicit_table":
        raw = params.get("support", doc.get("support"))
        if raw is None:
            raise ValidationError("explicit_table spec is missing 'support'")
        atoms = []
        for entry in raw:
            if isinstance(entry, dict):
                atoms.append((_require(entry, "x", kind), _require(entry, "p", kind)))
            else:
                atoms.append(tuple(entry))
        model = ExplicitTableModel(atoms, atom_cap=cap)
    else:
        n = _require(doc, "n", kind)
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"model spec 'n' must be a positive integer, got {n!r}")
        if kind == "independent":
            model = IndependentModel(_require(params, "marginals", kind), atom_cap=cap)
            if model.n != n:
                raise ValidationError(
                    f"spec n={n} does not match {model.n} marginals"
                )
        elif kind == "boolean_iid":
            model = BooleanIIDModel(n, _require(params, "p", kind), atom_cap=cap)
        elif kind == "planted_clique":
            model = PlantedCliqueModel(
                n,
                _require(params, "p", kind),
                k=params.get("k"),
                indices=params.get("indices"),
                atom_cap=cap,
            )
        else:  # exchangeable_mixture
            rho = _require(params, "rho", kind)
            if "atoms" in params:
                model = ExchangeableMixtureModel(n, rho, params["atoms"], atom_cap=cap)
            else:
                model = ExchangeableMixtureModel.bernoulli(
                    n, rho, _require(params, "p", kind), atom_cap=cap
                )
    declared = doc.get("n")
    if declared is not None and declared != model.n:
        raise ValidationError(f"spec n={declared} does not match model n={model.n}")
    return model
