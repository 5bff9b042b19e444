"""Ask the right questions about one image and fold answers into a verdict.

Used by the miner (is this seed's image correct?), the curator (what did the
image actually show, for rectification?), and test-set evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import vlm
from .backends.base import EvalRequest
from .corpus import RELATION_PHRASES, PromptSpec
from .errors import RectificationError


@dataclass
class Judgment:
    prompt_id: str
    kind: str
    status: str  # "ok" or "unparseable"
    correct: bool | None
    verdicts: list = field(default_factory=list)  # NumericVerdict per category
    affirmed: bool | None = None
    description: str | None = None
    answers: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def judge_image(eval_backend, prompt: PromptSpec, image_ref: str,
                convention: str = "mining") -> Judgment:
    """Run the question protocol for one prompt/image pair.

    convention selects the spatial question wording ("mining" or "eval");
    counting questions are shared, only downstream bookkeeping differs.
    """
    if prompt.kind in ("numerical", "out_of_scope"):
        category = prompt.categories[0]
        question = vlm.numerical_query(category.plural)
        answer = eval_backend.evaluate(EvalRequest(image_ref, question)).answer
        verdict = vlm.parse_quantity(answer, noun=category.plural)
        status = "ok" if verdict.parseable else "unparseable"
        correct = (verdict.value == prompt.quantity) if verdict.parseable else None
        return Judgment(prompt.id, prompt.kind, status, correct,
                        verdicts=[verdict], answers=[answer])

    if prompt.kind == "multi_category":
        verdicts, answers = [], []
        for category in prompt.categories:
            question = vlm.numerical_query(category.plural)
            answer = eval_backend.evaluate(EvalRequest(image_ref, question)).answer
            verdicts.append(vlm.parse_quantity(answer, noun=category.plural))
            answers.append(answer)
        if not all(v.parseable for v in verdicts):
            return Judgment(prompt.id, prompt.kind, "unparseable", None,
                            verdicts=verdicts, answers=answers)
        correct = all(
            v.value == target
            for v, target in zip(verdicts, prompt.quantity_pair)
        )
        return Judgment(prompt.id, prompt.kind, "ok", correct,
                        verdicts=verdicts, answers=answers)

    if prompt.kind == "spatial":
        subject, obj = prompt.categories
        phrase = RELATION_PHRASES[prompt.relation]
        template = (
            vlm.spatial_queries if convention == "mining"
            else vlm.eval_spatial_queries
        )
        q1, q2 = template(
            subject.name, phrase, obj.name,
            subject_article=subject.article, object_article=obj.article,
        )
        a1 = eval_backend.evaluate(EvalRequest(image_ref, q1)).answer
        a2 = eval_backend.evaluate(
            EvalRequest(image_ref, q2, history=((q1, a1),))
        ).answer
        affirmed = vlm.parse_yes_no(a2)
        status = "ok" if affirmed is not None else "unparseable"
        return Judgment(prompt.id, prompt.kind, status,
                        affirmed if affirmed is not None else None,
                        affirmed=affirmed, description=a1, answers=[a1, a2])

    raise ValueError(f"cannot judge prompt kind {prompt.kind!r}")


def rectified_text(prompt: PromptSpec, judgment: Judgment) -> str:
    """Training text after folding the observed content back into the prompt.

    Raises RectificationError when the judgment gives nothing to rewrite
    with; the caller decides how to flag that entry.
    """
    if prompt.kind in ("numerical", "out_of_scope"):
        return vlm.rectify_numerical(prompt.text, judgment.verdicts[0])
    if prompt.kind == "spatial":
        return vlm.rectify_spatial(
            prompt.text, judgment.affirmed, judgment.description or ""
        )
    raise RectificationError(f"no rectification rule for kind {prompt.kind!r}")
