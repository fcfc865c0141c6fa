"""Randomised audits of how the measure behaves under local operations.

A :class:`LocalChannel` is a generalised measurement on one block of a
split, padded with the identity everywhere else.  The checks in this
module are one-sided by construction: branch outcomes enter through
certified lower endpoints and the input state through its upper
endpoint, so every reported violation is a genuine counterexample even
when brackets are open.  Suites sweep the built-in states over seeded
random channels and return JSON-ready rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, InvariantBreach
from .linalg import group_density, ungroup_density
from .mixed import MixedOptions, schmidt_measure_mixed
from .pure import FitOptions, flattening_lower_bound, schmidt_measure_pure
from .splits import Split
from .states import DensityOperator, PartyLayout, PureState
from . import zoo

COMPLETENESS_TOL = 1e-10
PROBABILITY_TOL = 1e-9
PROBABILITY_FLOOR = 1e-12
MONOTONE_SLACK = 1e-6

_SUITE_OPTS = MixedOptions(extra_states=2, samples=32,
                           fit=FitOptions(max_iters=2500, restarts=8))


# -- channels -----------------------------------------------------------------

class LocalChannel:
    """Generalised measurement on one block of parties.

    ``kraus_ops`` act on the joint space of ``parties`` and the identity
    acts on every other party.  ``grouping`` assigns each operator to an
    outcome label, so one branch may pool several operators (a partly
    selective measurement).  Completeness is enforced on construction.
    """

    __slots__ = ("parties", "kraus_ops", "grouping")

    def __init__(self, parties, kraus_ops, grouping=None):
        parties = tuple(sorted(int(p) for p in parties))
        if not parties or len(set(parties)) != len(parties) or parties[0] < 1:
            raise InputError(f"bad party block {parties}")
        ops = tuple(np.asarray(e, dtype=np.complex128) for e in kraus_ops)
        if not ops:
            raise InputError("a channel needs at least one operator")
        d = ops[0].shape[0]
        if any(e.shape != (d, d) for e in ops):
            raise InputError("operators must be square and equally sized")
        if grouping is None:
            grouping = tuple(range(len(ops)))
        grouping = tuple(int(g) for g in grouping)
        if len(grouping) != len(ops):
            raise InputError("grouping must label every operator")
        gram = sum(e.conj().T @ e for e in ops)
        residual = float(np.max(np.abs(gram - np.eye(d))))
        if residual > COMPLETENESS_TOL:
            raise InvariantBreach(
                f"channel is not trace preserving, residual {residual:.3e}")
        object.__setattr__(self, "parties", parties)
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "grouping", grouping)

    def __setattr__(self, *_):
        raise AttributeError("LocalChannel is immutable")

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def branches(self) -> list:
        return sorted(set(self.grouping))

    def branch_ops(self, label) -> list:
        return [e for e, g in zip(self.kraus_ops, self.grouping)
                if g == label]

    def __repr__(self):
        return (f"LocalChannel(parties={self.parties}, "
                f"n_ops={len(self.kraus_ops)}, "
                f"n_branches={len(self.branches())})")


def random_local_channel(layout: PartyLayout, split: Split, party: int,
                         n_branches: int, seed: int) -> LocalChannel:
    """Haar-random generalised measurement on one block of a split.

    ``party`` indexes the block (1-based).  An isometry from the block
    space into block times an ``n_branches``-dimensional outcome ancilla
    is drawn and sliced along the ancilla index, so the operators are
    complete by construction; one branch per slice.
    """
    if n_branches < 1:
        raise InputError("a channel needs at least one branch")
    if not 1 <= party <= split.k:
        raise InputError(f"split has no block {party}")
    block = split.blocks[party - 1]
    d = layout.block_dim(block)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xC4A)))
    g = (rng.standard_normal((d * n_branches, d))
         + 1j * rng.standard_normal((d * n_branches, d)))
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r).copy()
    phases /= np.abs(phases)
    q = q * phases
    ops = [q[j * d:(j + 1) * d, :] for j in range(n_branches)]
    return LocalChannel(block, ops)


def basis_measurement(layout: PartyLayout, split: Split,
                      party: int) -> LocalChannel:
    """Projective measurement of one block in the computational basis."""
    if not 1 <= party <= split.k:
        raise InputError(f"split has no block {party}")
    block = split.blocks[party - 1]
    d = layout.block_dim(block)
    ops = []
    for i in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[i, i] = 1.0
        ops.append(e)
    return LocalChannel(block, ops)


def apply_branch(state, channel: LocalChannel, label):
    """Probability and normalised post state of one outcome branch.

    Accepts a pure or a mixed input.  Branches below the probability
    floor return ``(p, None)`` and should be skipped by callers: there
    is no meaningful state to normalise.
    """
    rho = DensityOperator.from_pure(state) if isinstance(state, PureState) \
        else state
    layout = rho.layout
    block = channel.parties
    if layout.block_dim(block) != channel.dim:
        raise InputError(
            f"channel dimension {channel.dim} does not match block {block}")
    rest = tuple(p for p in range(1, layout.n_parties + 1)
                 if p not in block)
    if rest:
        cut = Split((block, rest), layout.n_parties)
        grouped = group_density(rho, cut)
        eye = np.eye(layout.block_dim(rest))
        first = cut.blocks.index(block) == 0
        embed = (lambda e: np.kron(e, eye)) if first \
            else (lambda e: np.kron(eye, e))
    else:
        cut = None
        grouped = rho.matrix
        embed = lambda e: e
    acc = np.zeros_like(grouped)
    for e in channel.branch_ops(label):
        big = embed(e)
        acc += big @ grouped @ big.conj().T
    p = float(np.real(np.trace(acc)))
    if p < PROBABILITY_FLOOR:
        return p, None
    acc = acc / p
    acc = 0.5 * (acc + acc.conj().T)
    if cut is not None:
        acc = ungroup_density(acc, layout, cut)
    return p, DensityOperator(layout, acc)


# -- single-case checks -------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    """Outcome of one average-measure audit.

    ``value_before`` is the input's upper endpoint (its exact value when
    ``exact_before``); ``branch_terms`` holds ``(label, p, lower)`` per
    branch; ``expectation`` is the probability-weighted sum of the
    lower endpoints.
    """

    value_before: float
    exact_before: bool
    branch_terms: tuple
    expectation: float
    verdict: str


@dataclass(frozen=True)
class MixingReport:
    """Outcome of one convexity audit: the mixture's upper endpoint
    against the weighted average of the members' upper endpoints."""

    mix_upper: float
    weighted_upper: float
    verdict: str


def _value_bracket(state, split, opts):
    if isinstance(state, DensityOperator) and state.is_pure():
        state = state.as_pure()
    if isinstance(state, PureState):
        mv = schmidt_measure_pure(state, split, opts.fit)
        return mv.value_lo, mv.value_hi
    mv = schmidt_measure_mixed(state, split, opts)
    return mv.lower, mv.upper


def _certified_lower(state, split, opts) -> float:
    """Cheap certified lower endpoint: flattening ranks for pure states,
    the full engine's lower endpoint otherwise."""
    if isinstance(state, DensityOperator) and state.is_pure():
        state = state.as_pure()
    if isinstance(state, PureState):
        return math.log2(flattening_lower_bound(state, split))
    return schmidt_measure_mixed(state, split, opts).lower


def check_monotonicity(state, split: Split, channel: LocalChannel,
                       opts: Optional[MixedOptions] = None,
                       before=None) -> MonotonicityReport:
    """Audit that the measure does not increase on average under a local
    generalised measurement.

    The test is sound one-sidedly: a ``violation`` verdict is a genuine
    counterexample, a pass with an open input bracket is only
    ``consistent``, and a pass with a closed one is ``verified``.
    ``before`` can carry a precomputed ``(lower, upper)`` bracket of the
    input to avoid recomputation across a sweep.
    """
    opts = opts or MixedOptions()
    lo, hi = before if before is not None else _value_bracket(
        state, split, opts)
    terms = []
    total = 0.0
    expectation = 0.0
    for label in channel.branches():
        p, post = apply_branch(state, channel, label)
        total += p
        if post is None:
            terms.append((label, p, 0.0))
            continue
        lower = _certified_lower(post, split, opts)
        expectation += p * lower
        terms.append((label, p, lower))
    if abs(total - 1.0) > PROBABILITY_TOL:
        raise InvariantBreach(
            f"branch probabilities sum to {total!r}, not one")
    if expectation > hi + MONOTONE_SLACK:
        verdict = "violation"
    elif hi - lo <= 1e-9:
        verdict = "verified"
    else:
        verdict = "consistent"
    return MonotonicityReport(hi, hi - lo <= 1e-9, tuple(terms),
                              expectation, verdict)


def check_mixing(states: Sequence, weights: Sequence[float],
                 split: Split,
                 opts: Optional[MixedOptions] = None) -> MixingReport:
    """Audit convexity: mixing never pushes the upper endpoint above the
    weighted average of the members' upper endpoints, because pooling
    the members' decompositions already achieves that average."""
    opts = opts or MixedOptions()
    if len(states) != len(weights) or not states:
        raise InputError("need one weight per state")
    weights = [float(w) for w in weights]
    if any(w <= 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise InputError("weights must be positive and sum to one")
    mats = []
    layout = None
    weighted = 0.0
    for state, w in zip(states, weights):
        rho = DensityOperator.from_pure(state) \
            if isinstance(state, PureState) else state
        if layout is None:
            layout = rho.layout
        elif rho.layout != layout:
            raise InputError("mixing needs a common layout")
        mats.append(w * rho.matrix)
        weighted += w * _value_bracket(rho, split, opts)[1]
    mix = DensityOperator(layout, sum(mats))
    mix_upper = _value_bracket(mix, split, opts)[1]
    verdict = "violation" if mix_upper > weighted + MONOTONE_SLACK else "ok"
    return MixingReport(mix_upper, weighted, verdict)


# -- randomised suites --------------------------------------------------------

def _default_cases():
    return (("ghz3", zoo.ghz(3)),
            ("w3", zoo.w(3)),
            ("ghz4", zoo.ghz(4)),
            ("w4", zoo.w(4)),
            ("cluster4", zoo.cluster4()))


def monotonicity_suite(cases=None, seeds: int = 200,
                       branch_counts=(2, 3),
                       opts: Optional[MixedOptions] = None) -> list:
    """Seeded sweep of random single-block channels over the built-in
    pure states, on their finest split.

    Each case is a pure function of its seed: the acting block cycles
    with the seed and the branch count alternates.  Returns one row per
    channel with the fields state, split, party, seed, P_before,
    expectation and verdict.
    """
    opts = opts or MixedOptions()
    rows = []
    for name, psi in (cases or _default_cases()):
        split = Split.full(psi.layout.n_parties)
        before = _value_bracket(psi, split, opts)
        for seed in range(seeds):
            party = seed % split.k + 1
            branches = branch_counts[seed % len(branch_counts)]
            channel = random_local_channel(psi.layout, split, party,
                                           branches, seed)
            report = check_monotonicity(psi, split, channel, opts,
                                        before=before)
            rows.append({"state": name, "split": str(split),
                         "party": party, "seed": seed,
                         "P_before": report.value_before,
                         "expectation": report.expectation,
                         "verdict": report.verdict})
    return rows


def unitary_invariance_suite(cases=None, seeds: int = 5,
                             opts: Optional[MixedOptions] = None) -> list:
    """Single-branch channels are local unitaries, so the full bracket
    must come back unchanged; rows record both values and the verdict
    at the usual slack."""
    opts = opts or MixedOptions()
    rows = []
    for name, psi in (cases or _default_cases()):
        split = Split.full(psi.layout.n_parties)
        lo, hi = _value_bracket(psi, split, opts)
        for seed in range(seeds):
            party = seed % split.k + 1
            channel = random_local_channel(psi.layout, split, party, 1, seed)
            p, post = apply_branch(psi, channel, 0)
            post_lo, post_hi = _value_bracket(post, split, opts)
            ok = (abs(p - 1.0) <= PROBABILITY_TOL
                  and abs(post_lo - lo) <= MONOTONE_SLACK
                  and abs(post_hi - hi) <= MONOTONE_SLACK)
            rows.append({"state": name, "split": str(split),
                         "party": party, "seed": seed,
                         "P_before": hi, "P_after": post_hi,
                         "verdict": "verified" if ok else "violation"})
    return rows


def mixing_suite(lambdas=None,
                 opts: Optional[MixedOptions] = None) -> list:
    """Convexity sweep over two-state mixtures on a weight grid.

    The default options are trimmed for sweep throughput; endpoints stay
    certified either way, options only trade tightness for time.
    """
    opts = opts or _SUITE_OPTS
    if lambdas is None:
        lambdas = (0.0, 0.25, 0.5, 0.75, 1.0)
    layout3 = zoo.ghz(3).layout
    basis000 = PureState(layout3, np.eye(8, dtype=np.complex128)[0])
    pairs = (("ghz3+000", zoo.ghz(3), basis000),
             ("w3+000", zoo.w(3), basis000),
             ("ghz3+w3", zoo.ghz(3), zoo.w(3)))
    rows = []
    for name, left, right in pairs:
        split = Split.full(left.layout.n_parties)
        for lam in lambdas:
            lam = float(lam)
            if lam <= 0.0 or lam >= 1.0:
                members = [left] if lam >= 1.0 else [right]
                report = check_mixing(members, [1.0], split, opts)
            else:
                report = check_mixing([left, right], [lam, 1.0 - lam],
                                      split, opts)
            rows.append({"pair": name, "lam": lam,
                         "mix_upper": report.mix_upper,
                         "weighted_upper": report.weighted_upper,
                         "verdict": report.verdict})
    return rows
