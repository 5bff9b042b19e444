import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parsing_cases import QUANTITY_CASES, YES_NO_CASES
from seedmine.errors import RectificationError
from seedmine.vlm import (
    GATE_INSTRUCTION,
    NumericVerdict,
    eval_quantity_clamp,
    eval_spatial_queries,
    gate_prompt,
    numerical_query,
    parse_gate,
    parse_quantity,
    parse_yes_no,
    rectify_numerical,
    rectify_spatial,
    spatial_queries,
)


def test_numerical_query_template():
    assert numerical_query("apples") == (
        "Answer in one sentence: How many apples are in this image?"
    )


def test_spatial_query_templates():
    q1, q2 = spatial_queries("dice", "on the top of", "monkey")
    assert q1 == "Describe the positions of the objects in the image in one sentence"
    assert q2 == ("Answer with yes or no: Is there a dice positioned "
                  "on the top of a monkey in the image?")
    q1, q2 = spatial_queries("apple", "under", "table", subject_article="an")
    assert "an apple" in q2


def test_eval_spatial_query_templates():
    q1, q2 = eval_spatial_queries("dice", "on the top of", "monkey")
    assert q1 == ("Is there any dice in the image? Is there any monkey? "
                  "What is their spatial relation?")
    assert q2 == ("Based on your description, answer with yes or no: "
                  "Is there a dice on the top of a monkey in this image?")
    assert "positioned" not in q2


@pytest.mark.parametrize("answer,noun,word,value", QUANTITY_CASES)
def test_quantity_cases(answer, noun, word, value):
    verdict = parse_quantity(answer, noun=noun)
    assert (verdict.word, verdict.value) == (word, value), answer


@pytest.mark.parametrize("answer,expected", YES_NO_CASES)
def test_yes_no_cases(answer, expected):
    assert parse_yes_no(answer) is expected


def test_parse_never_raises_on_random_bytes():
    rng = random.Random(0)
    for _ in range(10_000):
        n = rng.randrange(0, 60)
        text = "".join(chr(rng.randrange(1, 0x250)) for _ in range(n))
        verdict = parse_quantity(text, noun="apples")
        assert isinstance(verdict, NumericVerdict)
        parse_yes_no(text)


@given(st.text(max_size=200))
@settings(max_examples=300, deadline=None)
def test_parse_quantity_total(text):
    verdict = parse_quantity(text, noun="apples")
    # value and word agree: value None exactly for numerous or unparseable
    if verdict.word is None:
        assert verdict.value is None
    elif verdict.word == "numerous":
        assert verdict.value is None
    else:
        assert verdict.value is not None and 0 <= verdict.value <= 19


def test_ambiguous_flag_without_noun():
    verdict = parse_quantity("Maybe two, maybe three.")
    assert verdict.value == 2
    assert verdict.ambiguous
    verdict = parse_quantity("two plus two")
    assert verdict.value == 2
    assert not verdict.ambiguous


def test_clamp_rules():
    assert eval_quantity_clamp(parse_quantity("there are 19 apples")) == 19
    assert eval_quantity_clamp(parse_quantity("there are 25 apples")) == 19
    assert eval_quantity_clamp(parse_quantity("too many to count")) == 19
    assert eval_quantity_clamp(parse_quantity("three apples")) == 3
    with pytest.raises(ValueError):
        eval_quantity_clamp(parse_quantity("hard to say"))


def test_rectify_numerical_basic():
    verdict = parse_quantity("I count six apples", noun="apples")
    assert rectify_numerical("Four apples, on a beach", verdict) == \
        "Six apples, on a beach"


def test_rectify_numerical_numerous_head():
    verdict = parse_quantity("three apples", noun="apples")
    assert rectify_numerical("Numerous apples, on a beach", verdict) == \
        "Three apples, on a beach"
    verdict = parse_quantity("far too many to count", noun="apples")
    assert rectify_numerical("Four apples, on a beach", verdict) == \
        "Numerous apples, on a beach"


def test_rectify_numerical_teen_head():
    verdict = parse_quantity("five apples", noun="apples")
    assert rectify_numerical("12 apples, on a beach", verdict) == \
        "Five apples, on a beach"


def test_rectify_numerical_idempotent():
    verdict = parse_quantity("six apples", noun="apples")
    once = rectify_numerical("Four apples, on a beach", verdict)
    assert rectify_numerical(once, verdict) == once


def test_rectify_numerical_rejects_unparseable():
    with pytest.raises(RectificationError):
        rectify_numerical("Four apples, on a beach",
                          parse_quantity("hard to say"))


def test_rectify_numerical_rejects_nonquantity_head():
    verdict = parse_quantity("six apples", noun="apples")
    with pytest.raises(RectificationError):
        rectify_numerical("A dice on the top of a monkey", verdict)


def test_rectify_spatial_affirmed_keeps_text():
    assert rectify_spatial("A dice on the top of a monkey", True, "ignored") == \
        "A dice on the top of a monkey"


def test_rectify_spatial_negative_uses_description():
    out = rectify_spatial("A dice on the top of a monkey", False,
                          "The dice is on the right of the monkey.")
    assert out == "The dice is on the right of the monkey."
    out = rectify_spatial("A dice on the top of a monkey", None,
                          "The dice leans against the monkey.")
    assert out == "The dice leans against the monkey."


def test_rectify_spatial_rejects_empty_description():
    with pytest.raises(RectificationError):
        rectify_spatial("A dice on the top of a monkey", False, "   ")


def test_gate_prompt_format():
    text = gate_prompt("top", ["Scene one", "Scene two"])
    lines = text.splitlines()
    assert lines[0] == GATE_INSTRUCTION.format(relation="top")
    assert lines[1:] == ["Scene one", "Scene two"]
    assert "<scene> | <logical_or_not> | <very_brief_justification>" in lines[0]


def test_parse_gate_verdicts():
    answer = "\n".join([
        "Sure, here is my analysis:",
        "A bowl on the top of a table | logical | bowls rest on tables",
        "A table on the top of a bowl | not logical | tables crush bowls",
        "A dog on the left of a cat | yes | plausible",
        "A cat under a dog | unsure",
        "A fish under a tree | illogical | fish do not climb",
    ])
    verdicts = parse_gate(answer)
    assert len(verdicts) == 5
    assert verdicts[0].logical is True
    assert verdicts[1].logical is False
    assert verdicts[2].logical is True
    assert verdicts[3].logical is None
    assert verdicts[4].logical is False
    assert verdicts[0].justification == "bowls rest on tables"


def test_parse_gate_skips_chatter():
    assert parse_gate("no pipes here\nnot a verdict line") == []


@given(st.text(max_size=400))
@settings(max_examples=200, deadline=None)
def test_parse_gate_total(text):
    for verdict in parse_gate(text):
        assert verdict.logical in (True, False, None)
