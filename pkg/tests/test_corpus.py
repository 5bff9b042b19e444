import json

import pytest

from seedmine.corpus import (
    DEFAULT_CATEGORY_PAIRS,
    IN_SCOPE_QUANTITIES,
    RELATION_PHRASES,
    RELATIONS,
    SpatialScene,
    build_corpus,
    build_spatial_scenes,
    compose_multi_category,
    compose_numerical,
    compose_spatial,
    default_quantity_pairs,
    filter_scenes,
    heuristic_gate,
    load_prompts,
    parse_prompt,
    prompt_from_record,
    prompt_to_record,
    propose_spatial_scenes,
    task_of,
    write_prompts,
)
from seedmine.errors import CorpusError, ParseError, QuotaShortfallError


@pytest.fixture(scope="module")
def corpus(catalog):
    return build_corpus(catalog)


def _split_counts(prompts):
    train = sum(1 for p in prompts if p.split == "train")
    return train, len(prompts) - train


def test_numerical_counts(corpus):
    assert _split_counts(corpus["numerical"]) == (2400, 600)


def test_spatial_counts(corpus):
    assert _split_counts(corpus["spatial"]) == (2560, 640)


def test_multi_category_counts(corpus):
    assert _split_counts(corpus["multi_category"]) == (0, 600)


def test_out_of_scope_counts(corpus):
    assert _split_counts(corpus["out_of_scope"]) == (0, 240)


def test_numerical_covers_every_cell(corpus, catalog):
    # every (category, quantity, setting) cell appears exactly once per split
    seen = set()
    for p in corpus["numerical"]:
        cell = (p.categories[0].name, p.quantity, p.setting.index)
        assert cell not in seen
        seen.add(cell)
    assert len(seen) == 90 * 5 * 4 + 60 * 5 * 4  # test cells + extra train cells


def test_numerical_prompt_shape(corpus, catalog):
    p = corpus["numerical"][0]
    assert p.text == "Two apples, in an old European town"
    for p in corpus["numerical"]:
        assert p.quantity in IN_SCOPE_QUANTITIES
        assert p.text[0].isupper()
        assert ", " in p.text


def test_spatial_prompt_shape(corpus):
    for p in corpus["spatial"][:200]:
        assert p.relation in RELATIONS
        assert RELATION_PHRASES[p.relation] in p.text
        assert p.categories[0].name != p.categories[1].name


def test_spatial_relation_quotas(corpus):
    for split, per_relation in (("train", 640), ("test", 160)):
        for relation in RELATIONS:
            n = sum(
                1 for p in corpus["spatial"]
                if p.split == split and p.relation == relation
            )
            assert n == per_relation, (split, relation, n)


def test_split_hygiene(corpus, catalog):
    train_names = {c.name for c in catalog.categories_for("train")}
    for kind, prompts in corpus.items():
        for p in prompts:
            names = {c.name for c in p.categories}
            if p.split == "train":
                assert names <= train_names, (kind, p.text)
                assert p.setting.split == "train"
            else:
                assert not names & train_names or kind in ("multi_category",)
                assert p.setting.split == "test"


def test_multi_category_uses_default_pairs(corpus, catalog):
    pair_names = {(a, b) for a, b in DEFAULT_CATEGORY_PAIRS}
    seen = set()
    for p in corpus["multi_category"]:
        names = (p.categories[0].name, p.categories[1].name)
        assert names in pair_names
        seen.add(names)
    assert seen == pair_names


def test_multi_category_quantity_pairs():
    pairs = default_quantity_pairs()
    assert len(pairs) == 15
    assert all(x >= 1 and y >= 1 and 2 <= x + y <= 6 for x, y in pairs)
    assert len(set(pairs)) == 15


def test_multi_category_prompt_text(corpus):
    texts = {p.text for p in corpus["multi_category"]}
    assert "An ant and a basketball, dark solid color background" in texts
    for p in corpus["multi_category"]:
        assert " and " in p.text
        assert p.quantity_pair is not None
        assert p.quantity is None  # the pair is the target, not one count


def test_out_of_scope_quantities(corpus):
    quantities = {p.quantity for p in corpus["out_of_scope"]}
    assert quantities == {7, 8}
    for p in corpus["out_of_scope"]:
        assert p.split == "test"


def test_out_of_scope_target_override(catalog):
    corpus = build_corpus(catalog, out_of_scope_target=300)
    assert len(corpus["out_of_scope"]) == 300
    # cycling beyond the distinct pool bumps the rep counter
    reps = {p.rep for p in corpus["out_of_scope"]}
    assert reps == {0} or max(reps) > 0


def test_corpus_deterministic(catalog):
    a = build_corpus(catalog, rng_seed=7)
    b = build_corpus(catalog, rng_seed=7)
    for kind in a:
        assert [p.text for p in a[kind]] == [p.text for p in b[kind]]
    c = build_corpus(catalog, rng_seed=8)
    assert [p.text for p in a["spatial"]] != [p.text for p in c["spatial"]]


def test_prompt_ids_unique(corpus):
    ids = [p.id for kind in corpus for p in corpus[kind]]
    assert len(set(ids)) == len(ids)


def test_record_roundtrip(corpus, catalog):
    for kind in corpus:
        for p in corpus[kind][::37]:
            record = json.loads(json.dumps(prompt_to_record(p)))
            assert prompt_from_record(record, catalog) == p


def test_record_rejects_tampered_id(corpus, catalog):
    record = prompt_to_record(corpus["numerical"][0])
    record["id"] = "0" * 16
    with pytest.raises(ParseError):
        prompt_from_record(record, catalog)


def test_write_load_roundtrip(tmp_path, corpus, catalog):
    prompts = corpus["numerical"][:100]
    path = tmp_path / "prompts.jsonl"
    write_prompts(prompts, path)
    assert load_prompts(path, catalog) == prompts


def test_parse_prompt_numerical(catalog):
    parsed = parse_prompt("Six apples, against the backdrop of a vibrant sunset",
                          catalog)
    assert parsed["kind"] == "numerical"
    assert parsed["quantity"] == 6
    assert parsed["categories"] == ["apple"]


def test_parse_prompt_spatial(catalog):
    parsed = parse_prompt("A dice on the top of a monkey, in an old European town",
                          catalog)
    assert parsed["kind"] == "spatial"
    assert parsed["relation"] == "top"
    assert parsed["categories"] == ["dice", "monkey"]


def test_parse_prompt_multi(catalog):
    parsed = parse_prompt("An ant and a basketball, dark solid color background",
                          catalog)
    assert parsed["kind"] == "multi_category"
    assert parsed["quantity_pair"] == (1, 1)


def test_parse_prompt_rejects_garbage(catalog):
    with pytest.raises(ParseError):
        parse_prompt("hello world", catalog)


def test_parse_all_generated(corpus, catalog):
    for kind in corpus:
        for p in corpus[kind][::53]:
            parsed = parse_prompt(p.text, catalog)
            assert parsed["categories"] == [c.name for c in p.categories]


def test_task_of(corpus):
    p = corpus["numerical"][0]
    assert task_of(p) == ("numerical", p.quantity)
    s = corpus["spatial"][0]
    assert task_of(s) == ("spatial", s.relation)
    m = corpus["multi_category"][0]
    assert task_of(m) == ("numerical", sum(m.quantity_pair))
    o = corpus["out_of_scope"][0]
    assert task_of(o) == ("numerical", o.quantity)


def test_compose_numerical_rejects_bad_quantity(catalog):
    with pytest.raises(CorpusError):
        compose_numerical(catalog, (1,), ("train",))
    with pytest.raises(CorpusError):
        compose_numerical(catalog, (9,), ("train",))


def test_scene_render(catalog):
    dice = catalog.category("dice")
    monkey = catalog.category("monkey")
    scene = SpatialScene(dice, monkey, "top")
    assert scene.render() == "A dice on the top of a monkey"


def test_scene_rejects_self_pair(catalog):
    dice = catalog.category("dice")
    with pytest.raises(CorpusError):
        SpatialScene(dice, dice, "top")


def test_scene_rejects_unknown_relation(catalog):
    dice = catalog.category("dice")
    monkey = catalog.category("monkey")
    with pytest.raises(CorpusError):
        SpatialScene(dice, monkey, "behind")


def test_propose_scenes_deterministic(catalog):
    a = propose_spatial_scenes(catalog, "top", 30, rng_seed=4)
    b = propose_spatial_scenes(catalog, "top", 30, rng_seed=4)
    assert [(s.subject.name, s.object.name) for s in a] == \
        [(s.subject.name, s.object.name) for s in b]
    pairs = {(s.subject.name, s.object.name) for s in a}
    assert len(pairs) == 30


def test_propose_scenes_caps_at_pair_universe(catalog):
    # test split has 30 categories -> 870 ordered pairs
    scenes = propose_spatial_scenes(catalog, "top", 10_000, split="test")
    assert len(scenes) == 30 * 29


def test_filter_scenes_tolerates_bad_gate(catalog):
    scenes = propose_spatial_scenes(catalog, "top", 5)

    def flaky(scene):
        raise RuntimeError("boom")

    assert filter_scenes(scenes, flaky) == []
    assert all(s.plausible is None for s in scenes)


def test_filter_scenes_bare_and_tuple_verdicts(catalog):
    scenes = propose_spatial_scenes(catalog, "top", 4)
    kept = filter_scenes(scenes, lambda s: True)
    assert len(kept) == 4
    kept = filter_scenes(scenes, lambda s: (False, "nope"))
    assert kept == []
    assert all(s.justification == "nope" for s in scenes)


def test_build_scenes_raises_on_shortfall(catalog):
    with pytest.raises(QuotaShortfallError):
        build_spatial_scenes(catalog, "top", 50, lambda s: False)


def test_heuristic_gate_blocks_large_on_small():
    from seedmine.corpus import SIZE_CLASS
    big = max(SIZE_CLASS, key=SIZE_CLASS.get)
    small = min(SIZE_CLASS, key=SIZE_CLASS.get)
    assert SIZE_CLASS[big] - SIZE_CLASS[small] >= 2

    class FakeCat:
        def __init__(self, name):
            self.name = name

    class FakeScene:
        def __init__(self, subject, obj, relation):
            self.subject = FakeCat(subject)
            self.object = FakeCat(obj)
            self.relation = relation

        def render(self):
            return f"{self.subject.name} {self.relation} {self.object.name}"

    verdict, _ = heuristic_gate(FakeScene(big, small, "top"))
    assert verdict is False
    verdict, _ = heuristic_gate(FakeScene(small, big, "top"))
    assert verdict is True
    verdict, _ = heuristic_gate(FakeScene(big, small, "left"))
    assert verdict is True
    verdict, _ = heuristic_gate(FakeScene(small, big, "under"))
    assert verdict is False


def test_compose_spatial_single_relation(catalog):
    scenes = build_spatial_scenes(catalog, "top", 5, heuristic_gate)
    settings = catalog.settings_for("train")[:2]
    prompts = compose_spatial(scenes, settings, 5)
    assert len(prompts) == 10
    assert all(p.relation == "top" for p in prompts)


def test_compose_multi_rejects_mixed_splits(catalog):
    train = catalog.categories_for("train")[0]
    test = catalog.categories_for("test")[0]
    with pytest.raises(CorpusError):
        compose_multi_category(catalog, pairs=[(train.name, test.name)])
