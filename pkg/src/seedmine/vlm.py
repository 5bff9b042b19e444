"""Question templates and answer parsing for image checks.

Two conventions coexist and are kept as separate code paths:

  * mining: counts above 19 (and uncountable phrasings) collapse to a
    value-free "numerous" verdict, which can never equal a target quantity;
  * evaluation: predictions are clamped to 19 so absolute error stays finite.

Spatial checks are two-step everywhere: a free-form description first, then
a yes/no question asked with the description in the history.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import RectificationError
from .words import COUNT_CEILING, NUMEROUS, ONES, WORD_TO_VALUE, value_to_word


def numerical_query(plural: str) -> str:
    return f"Answer in one sentence: How many {plural} are in this image?"


def spatial_queries(
    subject: str, relation_phrase: str, obj: str,
    subject_article: str = "a", object_article: str = "a",
) -> tuple[str, str]:
    """Two-step check used while scoring seeds. Articles default to the bare
    template; pass catalog articles to avoid forms like "a apple"."""
    q1 = "Describe the positions of the objects in the image in one sentence"
    q2 = (
        f"Answer with yes or no: Is there {subject_article} {subject} "
        f"positioned {relation_phrase} {object_article} {obj} in the image?"
    )
    return q1, q2


def eval_spatial_queries(
    subject: str, relation_phrase: str, obj: str,
    subject_article: str = "a", object_article: str = "a",
) -> tuple[str, str]:
    """Two-step check used at evaluation time (different wording)."""
    q1 = (
        f"Is there any {subject} in the image? Is there any {obj}? "
        f"What is their spatial relation?"
    )
    q2 = (
        f"Based on your description, answer with yes or no: Is there "
        f"{subject_article} {subject} {relation_phrase} {object_article} "
        f"{obj} in this image?"
    )
    return q1, q2


@dataclass(frozen=True)
class NumericVerdict:
    """Outcome of reading a count from an answer.

    word is the canonical form (zero..ten spelled out, 11..19 as digits,
    "numerous" above that); value is None exactly when the count is
    uncountable/numerous. An all-None verdict means nothing parseable was
    found.
    """
    word: str | None
    value: int | None
    raw: str = ""
    ambiguous: bool = False

    @property
    def parseable(self) -> bool:
        return self.word is not None

    @property
    def numerous(self) -> bool:
        return self.word == NUMEROUS


def _verdict_for(count: int, raw: str, ambiguous: bool) -> NumericVerdict:
    if count > COUNT_CEILING:
        return NumericVerdict(NUMEROUS, None, raw, ambiguous)
    return NumericVerdict(value_to_word(count), count, raw, ambiguous)


_WORD_PATTERN = "|".join(ONES)
_COUNT_RE = re.compile(rf"\b(\d+|{_WORD_PATTERN})\b", re.IGNORECASE)
_UNCOUNTABLE_RE = re.compile(
    r"\b(too many|numerous|countless|uncountable)\b", re.IGNORECASE
)
# "no"/"none" outright, or a negation with "any" later in the same clause
# ("does not contain any", "aren't any")
_NONE_RE = re.compile(
    r"\b(?:no|none)\b|(?:\bnot\b|n't)[^.,;!?]*\bany\b", re.IGNORECASE
)


def parse_quantity(answer: str, noun: str | None = None) -> NumericVerdict:
    """Read a count out of free text.

    When `noun` is given and several counts are mentioned, the one nearest
    the noun wins; without a noun the first mention wins and the verdict is
    flagged ambiguous if the mentions disagree.
    """
    mentions = []
    for m in _COUNT_RE.finditer(answer):
        token = m.group(1).lower()
        value = int(token) if token.isdigit() else WORD_TO_VALUE[token]
        mentions.append((m.start(), value))
    if not mentions:
        if _UNCOUNTABLE_RE.search(answer):
            return NumericVerdict(NUMEROUS, None, answer)
        if _NONE_RE.search(answer):
            return NumericVerdict("zero", 0, answer)
        return NumericVerdict(None, None, answer)

    distinct = {value for _, value in mentions}
    if noun:
        anchor = _find_anchor(answer.lower(), noun.lower())
        if anchor >= 0 and len(mentions) > 1:
            pos, value = min(mentions, key=lambda m: (abs(m[0] - anchor), m[0]))
            return _verdict_for(value, answer, ambiguous=False)
    _, value = mentions[0]
    return _verdict_for(value, answer, ambiguous=len(distinct) > 1)


def _find_anchor(answer: str, noun: str) -> int:
    """Locate the noun, accepting the singular when the plural is absent."""
    forms = [noun]
    if noun.endswith("es"):
        forms.append(noun[:-2])
    if noun.endswith("s"):
        forms.append(noun[:-1])
    forms.extend((noun + "s", noun + "es"))
    for form in forms:
        pos = answer.find(form)
        if pos >= 0:
            return pos
    return -1


_YES_NO_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def parse_yes_no(answer: str) -> bool | None:
    """First standalone yes/no token wins; None when neither appears."""
    m = _YES_NO_RE.search(answer)
    if m is None:
        return None
    return m.group(1).lower() == "yes"


def eval_quantity_clamp(verdict: NumericVerdict) -> int:
    """Evaluation-time prediction: counts capped at 19, numerous maps to 19."""
    if not verdict.parseable:
        raise ValueError("cannot clamp an unparseable verdict")
    if verdict.value is None:
        return COUNT_CEILING
    return min(verdict.value, COUNT_CEILING)


# ---------------------------------------------------------------------------
# Prompt rectification for curation.

_LEADING_TOKENS = (
    {w.capitalize() for w in ONES}
    | {str(v) for v in range(11, COUNT_CEILING + 1)}
    | {NUMEROUS.capitalize()}
)


def rectify_numerical(text: str, verdict: NumericVerdict) -> str:
    """Replace the leading quantity word with what was actually observed."""
    if not verdict.parseable:
        raise RectificationError("verdict is unparseable")
    head, sep, rest = text.partition(" ")
    if head not in _LEADING_TOKENS or not sep:
        raise RectificationError(f"prompt {text!r} does not start with a quantity")
    replacement = NUMEROUS if verdict.value is None else value_to_word(verdict.value)
    return f"{replacement.capitalize()} {rest}"


def rectify_spatial(text: str, affirmed: bool | None, description: str) -> str:
    """Affirmed prompts stand; otherwise the step-one description becomes the
    training text. A negative verdict without a description is unusable."""
    if affirmed is True:
        return text
    description = (description or "").strip()
    if not description:
        raise RectificationError("negative verdict with no description")
    return description


# ---------------------------------------------------------------------------
# Scene plausibility gate exchange format.

GATE_INSTRUCTION = (
    "Here are some scenes focused on the spatial relation '{relation}'. "
    "Now analyze each of them about if the scene is logical and answer in "
    "the following format: <scene> | <logical_or_not> | "
    "<very_brief_justification>"
)


def gate_prompt(relation_phrase: str, scene_texts) -> str:
    lines = [GATE_INSTRUCTION.format(relation=relation_phrase)]
    lines.extend(scene_texts)
    return "\n".join(lines)


@dataclass(frozen=True)
class GateVerdict:
    scene_text: str
    logical: bool | None
    justification: str = ""


def parse_gate(answer: str) -> list[GateVerdict]:
    """Parse pipe-delimited gate lines; lines without any pipe are chatter
    and skipped, a lone pipe yields an unknown verdict."""
    verdicts = []
    for line in answer.splitlines():
        line = line.strip()
        if not line or "|" not in line:
            continue
        fields = [f.strip() for f in line.split("|", 2)]
        if len(fields) < 3:
            verdicts.append(GateVerdict(fields[0], None))
            continue
        scene, flag, justification = fields
        lowered = flag.lower()
        if "not" in lowered or "illogical" in lowered:
            logical = False
        elif "logical" in lowered or lowered == "yes":
            logical = True
        else:
            logical = None
        verdicts.append(GateVerdict(scene, logical, justification))
    return verdicts
