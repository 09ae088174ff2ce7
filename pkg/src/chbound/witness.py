"""Randomized detection of a subset that violates the product-moment bound.

Given only sample access to [0, 1]-valued variables that are supposed to
satisfy E[prod_{i in S} X_i] <= c^|S| for every subset S, the detector runs
the coupled process of ``mc_engine`` many times, groups rounds by the index
set that was drawn, and looks for a set whose empirical product mean sits
above c^|S| by a margin.  A fresh batch of rounds then re-estimates that one
candidate directly: the second phase never reuses search rounds, so the
selection bias of picking the best-looking set cannot manufacture a finding.
A subset is reported only when the confirmation estimate clears the margin
threshold by at least two standard errors.

Why this works when the variables are dependent enough: if the tail
P(mean >= c + t) carries probability alpha while the certified bound says it
should be below exp(-n D(c+t || c)), some drawn subset must have an inflated
product mean, and the search phase visits subsets with exactly the weights
under which that excess is guaranteed on average.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dist_models import JointModel
from .entropy_core import BoundParams, kl_div
from .errors import BudgetOverflowError, ValidationError
from .mc_engine import (
    DEFAULT_BLOCK_SIZE,
    WITNESS_CONFIRM_TAG,
    WITNESS_SEARCH_TAG,
    _bernoulli_se,
    _map_blocks,
    _normalize_block,
    block_rng,
)

# Hard ceilings for the closed-form budgets.  The formulas grow like
# alpha^(-4/(c t)) and are astronomically conservative away from toy
# parameters; the caps keep default runs finishable while the margin
# threshold retains its closed form.
DEFAULT_SEARCH_CAP = 50_000
DEFAULT_CONFIRM_CAP = 20_000
DEFAULT_MIN_ROUNDS = 5
CONFIRM_Z = 2.0
LAMBDA_CAP = 1.0 - 1e-6

__all__ = [
    "DEFAULT_SEARCH_CAP",
    "DEFAULT_CONFIRM_CAP",
    "DEFAULT_MIN_ROUNDS",
    "CONFIRM_Z",
    "WitnessParams",
    "WitnessReport",
    "default_budgets",
    "find_dependent_set",
]


@dataclass(frozen=True)
class WitnessParams:
    """Fully resolved detection configuration.

    c and t are the scalar mean bound and deviation on the [0, 1] scale,
    alpha the tail probability the caller claims to observe, lam the index
    inclusion rate, and the remaining fields the round budgets and the
    acceptance margin.  ``default_budgets`` fills everything from
    (n, c, t, alpha); use ``dataclasses.replace`` to override fields.
    """

    n: int
    c: float
    t: float
    alpha: float
    lam: float
    m_search: int
    m_confirm: int
    margin_threshold: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.c < 1.0:
            raise ValidationError(f"c must lie in (0, 1), got {self.c}")
        if not 0.0 < self.t <= 1.0 - self.c:
            raise ValidationError(f"t must lie in (0, 1 - c], got {self.t}")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.lam < 1.0:
            raise ValidationError(f"lam must lie in (0, 1), got {self.lam}")
        for name, value in (("m_search", self.m_search), ("m_confirm", self.m_confirm)):
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if not self.margin_threshold > 0.0:
            raise ValidationError(
                f"margin_threshold must be positive, got {self.margin_threshold}"
            )
        if self.alpha < self.tail_bound - 1e-15:
            warnings.warn(
                f"alpha={self.alpha} is below the certified tail bound "
                f"{self.tail_bound}; a dependent subset is not guaranteed to exist",
                stacklevel=2,
            )

    @property
    def tail_bound(self) -> float:
        """exp(-n D(c+t || c)), the certified ceiling for the tail."""
        return math.exp(-self.n * kl_div(min(self.c + self.t, 1.0), self.c))


def default_budgets(
    n: int,
    c: float,
    t: float,
    alpha: float,
    m_search_cap: int = DEFAULT_SEARCH_CAP,
    m_confirm_cap: int = DEFAULT_CONFIRM_CAP,
) -> WitnessParams:
    """Resolve (n, c, t, alpha) into a full WitnessParams.

    lam is the optimizing tilt t / ((1-c)(c+t)) capped just below 1; the
    margin is alpha^(4/(c t)) / 8; the round budgets follow the closed forms
    64 alpha^(-4/(c t)) n ln(n+1) and 64 margin^-2 ln(100), each truncated
    at its cap.  Raises ``BudgetOverflowError`` when the margin underflows
    to zero.  (Constructing the WitnessParams warns when alpha is below the
    certified tail bound: detection is not guaranteed there.)
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    c, t, alpha = float(c), float(t), float(alpha)
    if not 0.0 < c < 1.0:
        raise ValidationError(f"c must lie in (0, 1), got {c}")
    if not 0.0 < t <= 1.0 - c:
        raise ValidationError(f"t must lie in (0, 1 - c], got {t}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    exponent = 4.0 / (c * t)
    margin = alpha**exponent / 8.0
    if margin <= 0.0 or not math.isfinite(margin):
        raise BudgetOverflowError(
            f"margin alpha^(4/(c t))/8 underflows double precision for "
            f"alpha={alpha}, c={c}, t={t}"
        )

    def capped(raw: float, cap: int) -> int:
        if not math.isfinite(raw):
            return cap
        return min(math.ceil(raw), cap)

    try:
        inv = alpha**-exponent
    except OverflowError:
        inv = math.inf
    m_search = capped(64.0 * inv * n * math.log(n + 1.0), m_search_cap)
    try:
        inv_margin_sq = margin**-2
    except OverflowError:
        inv_margin_sq = math.inf
    m_confirm = capped(64.0 * inv_margin_sq * math.log(100.0), m_confirm_cap)
    lam = min(t / ((1.0 - c) * (c + t)), LAMBDA_CAP)
    return WitnessParams(
        n=n,
        c=c,
        t=t,
        alpha=alpha,
        lam=lam,
        m_search=max(1, m_search),
        m_confirm=max(1, m_confirm),
        margin_threshold=margin,
    )


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of one detection run.

    ``subset`` is non-empty exactly when ``verdict == "found"``; a rejected
    or missing candidate is described in ``note`` while ``empirical_moment``
    and ``threshold`` still carry the numbers from the confirmation test
    that was actually performed (zeros when no candidate existed).
    """

    verdict: str
    subset: tuple[int, ...]
    empirical_moment: float
    threshold: float
    confirm_std_error: float
    samples_used: int
    candidates: int
    note: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in ("found", "not_found"):
            raise ValidationError(f"verdict must be found/not_found, got {self.verdict!r}")
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))
        if self.verdict == "found":
            if not self.subset:
                raise ValidationError("a found verdict must name a non-empty subset")
            if not self.empirical_moment > self.threshold:
                raise ValidationError(
                    f"found verdict requires empirical_moment > threshold, got "
                    f"{self.empirical_moment} <= {self.threshold}"
                )
        elif self.subset:
            raise ValidationError("a not_found verdict must not name a subset")


def _search_block(
    model: JointModel, wp: WitnessParams, identity: BoundParams,
    seed: int, block: int, size: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = block_rng(seed, WITNESS_SEARCH_TAG, block)
    x = _normalize_block(model.sample_many(rng, size), identity)
    y = rng.random((size, model.n)) < x
    member = rng.random((size, model.n)) < wp.lam
    product = np.all(y | ~member, axis=1)
    subsets, inverse = np.unique(member, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    counts = np.bincount(inverse, minlength=len(subsets))
    hits = np.rint(
        np.bincount(inverse, weights=product.astype(np.float64), minlength=len(subsets))
    ).astype(np.int64)
    return subsets, counts, hits


def find_dependent_set(
    model: JointModel,
    wp: WitnessParams,
    seed: int = 0,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    min_rounds_per_subset: int = DEFAULT_MIN_ROUNDS,
) -> WitnessReport:
    """Two-phase search for a subset with E[prod_{i in S} X_i] > c^|S|.

    Search phase: ``wp.m_search`` rounds of the coupled process, grouped by
    the drawn index set; non-empty sets seen at least
    ``min_rounds_per_subset`` times become candidates, ranked by empirical
    excess over c^|S| (ties break toward smaller, lexicographically earlier
    sets).  Confirm phase: ``wp.m_confirm`` fresh rounds estimate
    prod_{i in S} X_i for the single best candidate only; the verdict is
    "found" iff that estimate exceeds c^|S| + margin_threshold by at least
    ``CONFIRM_Z`` standard errors.

    Like ``estimate_product``, the result depends on (seed, block_size) but
    never on ``workers``.
    """
    if model.n != wp.n:
        raise ValidationError(f"wp.n={wp.n} does not match model n={model.n}")
    if not isinstance(workers, int) or workers < 1:
        raise ValidationError(f"workers must be a positive integer, got {workers!r}")
    if not isinstance(block_size, int) or block_size < 1:
        raise ValidationError(f"block_size must be a positive integer, got {block_size!r}")
    if not isinstance(min_rounds_per_subset, int) or min_rounds_per_subset < 1:
        raise ValidationError(
            f"min_rounds_per_subset must be a positive integer, got {min_rounds_per_subset!r}"
        )
    identity = BoundParams.boolean(model.n, 1.0, 0.0)

    sizes = [block_size] * (wp.m_search // block_size)
    if wp.m_search % block_size:
        sizes.append(wp.m_search % block_size)
    results = _map_blocks(
        lambda b: _search_block(model, wp, identity, seed, b, sizes[b]),
        range(len(sizes)),
        workers,
    )
    tally: dict[bytes, list[int]] = {}
    for subsets, counts, hits in results:
        for row, cnt, hit in zip(subsets, counts, hits):
            entry = tally.setdefault(row.tobytes(), [0, 0])
            entry[0] += int(cnt)
            entry[1] += int(hit)

    candidates = []
    for key, (count, hit) in tally.items():
        mask = np.frombuffer(key, dtype=np.bool_)
        subset = tuple(int(i) for i in np.nonzero(mask)[0])
        if not subset or count < min_rounds_per_subset:
            continue
        score = hit / count - wp.c ** len(subset)
        candidates.append((score, subset, count, hit))
    if not candidates:
        return WitnessReport(
            verdict="not_found",
            subset=(),
            empirical_moment=0.0,
            threshold=0.0,
            confirm_std_error=0.0,
            samples_used=wp.m_search,
            candidates=0,
            note=(
                f"no non-empty subset was drawn at least {min_rounds_per_subset} "
                f"times in {wp.m_search} search rounds"
            ),
        )
    score, best, _, _ = min(candidates, key=lambda item: (-item[0], len(item[1]), item[1]))

    cols = np.array(best, dtype=np.int64)
    csizes = [block_size] * (wp.m_confirm // block_size)
    if wp.m_confirm % block_size:
        csizes.append(wp.m_confirm % block_size)

    def confirm_block(b: int) -> int:
        rng = block_rng(seed, WITNESS_CONFIRM_TAG, b)
        x = _normalize_block(model.sample_many(rng, csizes[b]), identity)
        bits = np.all(rng.random((csizes[b], len(cols))) < x[:, cols], axis=1)
        return int(bits.sum())

    hits = sum(_map_blocks(confirm_block, range(len(csizes)), workers))
    estimate = hits / wp.m_confirm
    std_error = _bernoulli_se(hits, wp.m_confirm)
    threshold = wp.c ** len(best) + wp.margin_threshold
    samples_used = wp.m_search + wp.m_confirm
    if estimate > threshold and estimate - threshold >= CONFIRM_Z * std_error:
        return WitnessReport(
            verdict="found",
            subset=best,
            empirical_moment=estimate,
            threshold=threshold,
            confirm_std_error=std_error,
            samples_used=samples_used,
            candidates=len(candidates),
        )
    return WitnessReport(
        verdict="not_found",
        subset=(),
        empirical_moment=estimate,
        threshold=threshold,
        confirm_std_error=std_error,
        samples_used=samples_used,
        candidates=len(candidates),
        note=(
            f"best candidate {list(best)} (search excess {score:.6g}) did not "
            f"clear c^|S| + margin = {threshold:.6g} on fresh samples"
        ),
    )
