"""Evaluation harness: position-swapped pairwise judging and its arithmetic.

Win/tie aggregation uses exact rational arithmetic internally; floats only
appear at presentation. Agreement (Cohen's kappa) likewise computes from
exact confusion-matrix fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import EmptyInput, IncompletePair, LengthMismatch
from .providers.base import Provider, complete_with_retry
from .providers.schemas import parse_structured
from .providers.templates import render_prompt
from .spine import Paradigm

# Per-paradigm metric sets; EAA is the long-horizon add-on.
METRIC_SETS: dict[Paradigm, tuple[str, ...]] = {
    Paradigm.HDP: ("RP", "Im", "NR", "LC"),
    Paradigm.SNP: ("RP", "Im", "NR", "LC"),
    Paradigm.FREE_EN: ("RP", "Im", "NS", "Cr", "PAC"),
}
LONG_HORIZON_ADDON = ("EAA",)

METRIC_RUBRICS: dict[str, str] = {
    "RP": (
        "Role performance: are actions and dialogue believable and consistent "
        "with each character's persona and evolving memories?"
    ),
    "Im": (
        "Immersion: how effectively do characters engage the environment and "
        "each other to provoke emotional resonance?"
    ),
    "NR": (
        "Narrative resonance: thematic adherence to the blueprint and "
        "structural depth that evokes reader empathy."
    ),
    "LC": (
        "Long-horizon consistency: logical stability across extended segments, "
        "smooth transitions, strict adherence to the narrative plan."
    ),
    "NS": (
        "Narrative soundness: causal feasibility; event preconditions are met "
        "and actions stay rational and goal-oriented."
    ),
    "Cr": (
        "Creativity: novelty of plot twists and character portrayals; generic "
        "stereotypes are penalized."
    ),
    "PAC": (
        "Plot advancement and conflict: simulation momentum; logical conflict "
        "escalation is rewarded and stagnation penalized."
    ),
    "EAA": (
        "Evolutionary action alignment: do agent actions track the recorded "
        "changes in relationships and identities over the long horizon?"
    ),
}


def metrics_for(paradigm: Paradigm | str, include_long_horizon: bool = False) -> tuple[str, ...]:
    base = METRIC_SETS[Paradigm.parse(paradigm)]
    return base + LONG_HORIZON_ADDON if include_long_horizon else base


@dataclass(frozen=True)
class JudgeVerdict:
    metric: str
    order: str  # "AB" | "BA"
    winner: str  # "A" | "B" | "Tie"
    likert_a: int
    likert_b: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "order": self.order,
            "winner": self.winner,
            "likert_a": self.likert_a,
            "likert_b": self.likert_b,
        }


def _verdict_from_payload(payload: dict, metric: str, order: str) -> JudgeVerdict:
    # "first"/"second" are presentation slots; map back to A/B per order.
    first_is_a = order == "AB"
    winner_slot = payload["winner"]
    if winner_slot == "tie":
        winner = "Tie"
    elif winner_slot == "first":
        winner = "A" if first_is_a else "B"
    else:
        winner = "B" if first_is_a else "A"
    likert_first, likert_second = payload["likert_first"], payload["likert_second"]
    likert_a = likert_first if first_is_a else likert_second
    likert_b = likert_second if first_is_a else likert_first
    return JudgeVerdict(metric=metric, order=order, winner=winner, likert_a=likert_a, likert_b=likert_b)


def judge_pair(
    transcript_a: str,
    transcript_b: str,
    metric: str,
    provider: Provider,
    paradigm: Paradigm | str = Paradigm.SNP,
) -> tuple[JudgeVerdict, JudgeVerdict]:
    """Judge one transcript pair twice with presentation order swapped."""
    if metric not in METRIC_RUBRICS:
        raise KeyError(f"unknown metric {metric!r}")
    paradigm = Paradigm.parse(paradigm)
    verdicts = []
    for order, (first, second) in (
        ("AB", (transcript_a, transcript_b)),
        ("BA", (transcript_b, transcript_a)),
    ):
        prompt = render_prompt(
            "JUDGE_PAIRWISE",
            {
                "metric_code": metric,
                "metric_rubric": METRIC_RUBRICS[metric],
                "paradigm": paradigm.value,
                "transcript_one": first,
                "transcript_two": second,
            },
        )
        response, _record = complete_with_retry(provider, "JUDGE_PAIRWISE", prompt)
        payload = parse_structured(response, "judge-verdict")
        verdicts.append(_verdict_from_payload(payload, metric, order))
    return verdicts[0], verdicts[1]


@dataclass
class AggregateReport:
    pairs: int
    win_rate_a: Fraction
    win_rate_b: Fraction
    tie_rate: Fraction
    split_tie_rate: Fraction
    explicit_tie_rate: Fraction
    mean_likert_a: Fraction
    mean_likert_b: Fraction

    def to_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "win_rate_a": float(self.win_rate_a),
            "win_rate_b": float(self.win_rate_b),
            "tie_rate": float(self.tie_rate),
            "split_tie_rate": float(self.split_tie_rate),
            "explicit_tie_rate": float(self.explicit_tie_rate),
            "mean_likert_a": float(self.mean_likert_a),
            "mean_likert_b": float(self.mean_likert_b),
        }


def aggregate(pairs: list[tuple[JudgeVerdict, JudgeVerdict]]) -> AggregateReport:
    """Strict bias-cancelling rule: a side wins only by winning both orders.

    Split-order outcomes and explicit judge ties both land in the tie
    bucket and are also reported separately, since reporting conventions
    differ on which of the two counts as a "tie".
    """
    if not pairs:
        raise EmptyInput("no verdict pairs to aggregate")
    wins_a = wins_b = split = explicit = 0
    likert_a_total = likert_b_total = 0
    for pair in pairs:
        if len(pair) != 2:
            raise IncompletePair("each pair needs both presentation orders")
        first, second = pair
        if first is None or second is None or {first.order, second.order} != {"AB", "BA"}:
            raise IncompletePair("each pair needs one AB and one BA verdict")
        winners = (first.winner, second.winner)
        if winners == ("A", "A"):
            wins_a += 1
        elif winners == ("B", "B"):
            wins_b += 1
        elif "Tie" in winners:
            explicit += 1
        else:
            split += 1
        likert_a_total += first.likert_a + second.likert_a
        likert_b_total += first.likert_b + second.likert_b
    n = len(pairs)
    return AggregateReport(
        pairs=n,
        win_rate_a=Fraction(wins_a, n),
        win_rate_b=Fraction(wins_b, n),
        tie_rate=Fraction(split + explicit, n),
        split_tie_rate=Fraction(split, n),
        explicit_tie_rate=Fraction(explicit, n),
        mean_likert_a=Fraction(likert_a_total, 2 * n),
        mean_likert_b=Fraction(likert_b_total, 2 * n),
    )


@dataclass(frozen=True)
class KappaResult:
    value: float
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


def cohen_kappa(labels_x: list[int], labels_y: list[int], categories: int = 5) -> KappaResult:
    """Chance-corrected agreement between two integer label sequences.

    kappa = (p_o - p_e) / (1 - p_e). When chance agreement is total
    (p_e = 1, a constant marginal on both sides), the statistic is defined
    as 1 for perfect agreement and 0 otherwise, flagged degenerate.
    """
    if len(labels_x) != len(labels_y):
        raise LengthMismatch(f"label lengths differ: {len(labels_x)} vs {len(labels_y)}")
    if not labels_x:
        raise EmptyInput("label sequences must be non-empty")
    for value in (*labels_x, *labels_y):
        if not isinstance(value, int) or not 1 <= value <= categories:
            raise LengthMismatch(f"labels must be integers in 1..{categories}, got {value!r}")

    n = len(labels_x)
    agreement = sum(1 for x, y in zip(labels_x, labels_y) if x == y)
    p_o = Fraction(agreement, n)
    p_e = Fraction(0)
    for category in range(1, categories + 1):
        row = sum(1 for x in labels_x if x == category)
        col = sum(1 for y in labels_y if y == category)
        p_e += Fraction(row, n) * Fraction(col, n)
    if p_e == 1:
        return KappaResult(value=1.0 if p_o == 1 else 0.0, degenerate=True)
    return KappaResult(value=float((p_o - p_e) / (1 - p_e)))


@dataclass(frozen=True)
class LatencyStats:
    total: float
    avg_turn: float
    median_turn: float
    min_turn: float
    max_turn: float
    avg_call: float

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "avg_turn": self.avg_turn,
            "median_turn": self.median_turn,
            "min_turn": self.min_turn,
            "max_turn": self.max_turn,
            "avg_call": self.avg_call,
        }


def latency_stats(turn_durations: list[float], call_durations: list[float]) -> LatencyStats:
    """Order statistics over turn and call durations.

    Median is the lower middle element for even counts (no interpolation),
    so it is always an observed duration.
    """
    if not turn_durations or not call_durations:
        raise EmptyInput("duration lists must be non-empty")
    if any(d < 0 for d in turn_durations) or any(d < 0 for d in call_durations):
        raise EmptyInput("durations must be non-negative")
    ordered = sorted(turn_durations)
    median = ordered[(len(ordered) - 1) // 2]
    return LatencyStats(
        total=sum(turn_durations),
        avg_turn=sum(turn_durations) / len(turn_durations),
        median_turn=median,
        min_turn=ordered[0],
        max_turn=ordered[-1],
        avg_call=sum(call_durations) / len(call_durations),
    )


def eaa_evolution_points(turn_records: list[dict]) -> list[dict]:
    """Snapshot-hash change points per role, for presenting evolution to judges.

    Consumes the per-turn snapshot hashes the orchestrator records, so the
    synchronization between memory evolution and subsequent actions can be
    judged post hoc.
    """
    last_hash: dict[str, str] = {}
    points = []
    for record in turn_records:
        if record.get("kind") not in (None, "turn"):
            continue
        role = record["role_code"]
        rsb_hash = record.get("rsb_hash", "")
        if not rsb_hash:
            continue
        if role in last_hash and last_hash[role] != rsb_hash:
            points.append(
                {
                    "turn_id": record["turn_id"],
                    "role_code": role,
                    "pre_hash": last_hash[role],
                    "post_hash": rsb_hash,
                }
            )
        last_hash[role] = rsb_hash
    return points
