"""Verification-oracle data types: assertion batches, verdicts,
counterexamples and unwind specifications."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from ..diag import E_INTERNAL, fail

LE = "<="
GE = ">="

VERIFIED = "Verified"
FALSIFIED = "Falsified"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Assertion:
    """One bound claim `_time <= X` (or `>=`), checked at the driver slot."""

    aid: str
    comparator: str  # LE or GE
    bound: int


@dataclass(frozen=True)
class AssertionBatch:
    """A batch of bound claims checked in a single oracle call.

    Bounds are strictly increasing so one exploration pass decides the
    whole batch and verdict monotonicity is meaningful.
    """

    assertions: tuple[Assertion, ...]

    def __post_init__(self):
        if not self.assertions:
            raise fail(E_INTERNAL, "assertion batch is empty")
        comps = {a.comparator for a in self.assertions}
        if not comps <= {LE, GE}:
            raise fail(E_INTERNAL, f"bad comparator in batch: {comps}")
        bounds = [a.bound for a in self.assertions]
        if any(b >= c for b, c in zip(bounds, bounds[1:])):
            raise fail(E_INTERNAL, "batch bounds must be strictly increasing")

    @staticmethod
    def of(bounds: Sequence[int], comparator: str = LE,
           prefix: str = "t") -> "AssertionBatch":
        return AssertionBatch(tuple(
            Assertion(f"{prefix}{i}", comparator, b)
            for i, b in enumerate(sorted(set(bounds)))))

    def __iter__(self):
        return iter(self.assertions)

    def __len__(self):
        return len(self.assertions)


@dataclass(frozen=True)
class Counterexample:
    """A concrete input that drives `_time` past a claimed bound.

    `assignments` lists (nondet site, occurrence, value) in draw order;
    replaying them through the interpreter with a default of 0 for any
    site not listed ends with `_time` equal to `witness_time`.
    """

    assignments: tuple[tuple[str, int, int], ...]
    failed: str  # assertion id
    witness_time: int
    trail: tuple[str, ...] = ()  # sparse statement trail, may be empty

    def injector_map(self) -> dict[tuple[str, int], int]:
        return {(site, occ): v for site, occ, v in self.assignments}


@dataclass(frozen=True)
class Outcome:
    """Per-assertion result."""

    status: str  # VERIFIED | FALSIFIED | UNKNOWN
    counterexample: Optional[Counterexample] = None
    reason: str = ""  # for UNKNOWN: timeout | memory | undecided-path | ...


@dataclass
class Verdict:
    """Outcome per assertion id, plus checker-level error notes."""

    outcomes: dict[str, Outcome] = field(default_factory=dict)
    errors: list[tuple[str, str]] = field(default_factory=list)  # (code, detail)
    stats: dict = field(default_factory=dict)

    def outcome(self, aid: str) -> Outcome:
        return self.outcomes[aid]

    def normalized(self, batch: AssertionBatch) -> "Verdict":
        """Enforce monotone consistency over increasing bounds.

        For `<=` claims: Verified at X implies Verified above X, and
        Falsified at X implies Falsified below X (the weaker bound's
        counterexample is the stronger one's witness).  For `>=` the
        directions flip.
        """
        ordered = list(batch)
        out = dict(self.outcomes)
        le = [a for a in ordered if a.comparator == LE]
        ge = [a for a in ordered if a.comparator == GE]
        for group, upward in ((le, True), (ge, False)):
            seq = group if upward else list(reversed(group))
            # propagate Verified toward weaker claims
            seen = False
            for a in seq:
                if out[a.aid].status == VERIFIED:
                    seen = True
                elif seen:
                    out[a.aid] = Outcome(VERIFIED)
            # propagate Falsified toward stronger claims, reusing the
            # weaker claim's counterexample when one was produced
            falsified_seen = False
            best: Optional[Counterexample] = None
            for a in reversed(seq):
                o = out[a.aid]
                if o.status == FALSIFIED:
                    falsified_seen = True
                    if o.counterexample is not None:
                        best = o.counterexample
                elif falsified_seen:
                    ce = None if best is None else replace(best, failed=a.aid)
                    out[a.aid] = Outcome(FALSIFIED, ce)
        v = Verdict(out, list(self.errors), dict(self.stats))
        return v

    def dump(self, batch: AssertionBatch) -> list[dict]:
        """One JSON-ready record per assertion, in batch order."""
        records = []
        for a in batch:
            o = self.outcomes.get(a.aid, Outcome(UNKNOWN, reason="unasked"))
            rec = {
                "id": a.aid,
                "comparator": a.comparator,
                "bound": a.bound,
                "status": o.status,
            }
            if o.reason:
                rec["reason"] = o.reason
            if o.counterexample is not None:
                rec["witness_time"] = o.counterexample.witness_time
                rec["assignments"] = [
                    list(x) for x in o.counterexample.assignments]
            records.append(rec)
        return records


@dataclass(frozen=True)
class UnwindSpec:
    """Loop unwinding depths for loops without a structural bound.

    `depths` maps a loop id (statement node id, or the `fn:ordinal`
    alias resolved by the caller) to the maximum number of body
    executions explored.  With `assert_exhaustion` (the default) a loop
    that could run past its depth is reported instead of silently
    truncated.
    """

    depths: Mapping[str, int] = field(default_factory=dict)
    assert_exhaustion: bool = True
    default_depth: Optional[int] = None

    def __post_init__(self):
        for k, d in self.depths.items():
            if d < 1:
                raise fail(E_INTERNAL, f"unwind depth for {k} must be >= 1")
        if self.default_depth is not None and self.default_depth < 1:
            raise fail(E_INTERNAL, "default unwind depth must be >= 1")

    def depth_for(self, loop_id: str) -> Optional[int]:
        d = self.depths.get(loop_id)
        return d if d is not None else self.default_depth


@dataclass(frozen=True)
class CheckBudget:
    """Resource limits for one oracle call."""

    seconds: Optional[float] = None
    max_paths: int = 200_000
    max_steps: int = 20_000_000
