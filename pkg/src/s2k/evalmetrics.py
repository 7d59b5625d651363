"""Avg@k, Cons@k and Pass@k over k generations per question.

Answers arrive already normalized by the rewards extractor; a missing answer
is the sentinel value "∅", which never equals gold but can still win the
majority vote. Vote ties go to the earliest-generated answer among the tied
values.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import S2KError

UNANSWERED = "∅"


class EmptyInput(S2KError):
    pass


@dataclass(frozen=True)
class GenerationSet:
    question_id: str
    answers: tuple[str, ...]
    gold: str

    def __post_init__(self):
        if not self.answers:
            raise ValueError("need at least one generation")


@dataclass(frozen=True)
class EvalReport:
    avg_at_k: float
    cons_at_k: float
    pass_at_k: float
    n_questions: int
    k: int

    def to_dict(self) -> dict:
        return {
            "avg_at_k": self.avg_at_k,
            "cons_at_k": self.cons_at_k,
            "pass_at_k": self.pass_at_k,
            "N_questions": self.n_questions,
            "k": self.k,
        }


def _check(sets: list[GenerationSet]) -> int:
    if not sets:
        raise EmptyInput("no generation sets")
    k = len(sets[0].answers)
    for s in sets:
        if len(s.answers) != k:
            raise ValueError(f"non-uniform k: {s.question_id} has {len(s.answers)}, expected {k}")
    return k


def _correct(s: GenerationSet) -> list[int]:
    return [1 if a == s.gold and a != UNANSWERED else 0 for a in s.answers]


def majority_answer(answers: tuple[str, ...]) -> str:
    """Most frequent answer; ties resolved by earliest first occurrence."""
    counts: dict[str, int] = {}
    for a in answers:
        counts[a] = counts.get(a, 0) + 1
    best = max(counts.values())
    for a in answers:
        if counts[a] == best:
            return a
    raise AssertionError("unreachable")


def avg_at_k(sets: list[GenerationSet]) -> float:
    k = _check(sets)
    return sum(sum(_correct(s)) for s in sets) / (k * len(sets))


def cons_at_k(sets: list[GenerationSet]) -> float:
    _check(sets)
    hits = sum(
        1 for s in sets
        if majority_answer(s.answers) == s.gold and majority_answer(s.answers) != UNANSWERED
    )
    return hits / len(sets)


def pass_at_k(sets: list[GenerationSet]) -> float:
    _check(sets)
    return sum(1 for s in sets if any(_correct(s))) / len(sets)


def evaluate(sets: list[GenerationSet]) -> EvalReport:
    k = _check(sets)
    return EvalReport(
        avg_at_k=avg_at_k(sets),
        cons_at_k=cons_at_k(sets),
        pass_at_k=pass_at_k(sets),
        n_questions=len(sets),
        k=k,
    )


def set_from_record(rec: dict) -> GenerationSet:
    answers = tuple(UNANSWERED if a is None or a == "" else str(a) for a in rec["answers"])
    return GenerationSet(
        question_id=str(rec.get("question_id", "")),
        answers=answers,
        gold=str(rec["gold"]),
    )
