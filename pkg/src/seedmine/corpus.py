"""Prompt corpus construction.

Four prompt families share one surface grammar, so every generated prompt can
be parsed back into its structured fields:

    numerical       "Six apples, against the backdrop of a vibrant sunset"
    spatial         "A dice on the top of a monkey, in an old European town"
    multi_category  "An ant and a basketball, dark solid color background"
    out_of_scope    numerical with quantities 7 and 8 on the test split

Counts with the bundled catalog: numerical 60*5*8 = 2,400 train and
30*5*4 = 600 test; spatial 4*80*8 = 2,560 train and 4*40*4 = 640 test;
multi-category 4*10*15 = 600; out-of-scope 30*2*4 = 240 by default.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field

from .catalog import BackgroundSetting, Catalog, CategoryEntry
from .errors import CorpusError, ParseError, QuotaShortfallError
from .words import ONES, quantity_word

log = logging.getLogger(__name__)

KINDS = ("numerical", "spatial", "multi_category", "out_of_scope")

RELATIONS = ("top", "left", "right", "under")

RELATION_PHRASES = {
    "top": "on the top of",
    "left": "on the left of",
    "right": "on the right of",
    "under": "under",
}

PHRASE_TO_RELATION = {v: k for k, v in RELATION_PHRASES.items()}

IN_SCOPE_QUANTITIES = (2, 3, 4, 5, 6)
OUT_OF_SCOPE_QUANTITIES = (7, 8)

# Category pairs used for two-category prompts; all on the test split.
DEFAULT_CATEGORY_PAIRS = (
    ("ant", "basketball"),
    ("cup", "spoon"),
    ("tiger", "penguin"),
    ("rabbit", "dog"),
    ("hat", "basket"),
    ("ukulele", "volleyball"),
    ("bird", "egg"),
    ("bowl", "dove"),
    ("chair", "panda"),
    ("crow", "butterfly"),
)


def default_quantity_pairs() -> list[tuple[int, int]]:
    """All ordered (x, y) with x, y >= 1 and 2 <= x+y <= 6; 15 pairs sorted
    by (sum, x): (1,1), (1,2), (2,1), ..., (3,3), (4,2), (5,1)."""
    pairs = [
        (x, y)
        for x in range(1, 6)
        for y in range(1, 6)
        if 2 <= x + y <= 6
    ]
    pairs.sort(key=lambda p: (p[0] + p[1], p[0]))
    return pairs


@dataclass
class SpatialScene:
    subject: CategoryEntry
    object: CategoryEntry
    relation: str
    plausible: bool | None = None
    justification: str = ""

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise CorpusError(f"unknown relation {self.relation!r}")
        if self.subject.name == self.object.name:
            raise CorpusError("scene subject and object must differ")

    @property
    def split(self) -> str:
        return self.subject.split

    def render(self) -> str:
        phrase = RELATION_PHRASES[self.relation]
        return (
            f"{self.subject.article.capitalize()} {self.subject.name} "
            f"{phrase} {self.object.article} {self.object.name}"
        )


@dataclass(frozen=True)
class PromptSpec:
    id: str
    kind: str
    split: str
    text: str
    setting: BackgroundSetting
    categories: tuple[CategoryEntry, ...]
    quantity: int | None = None
    quantity_pair: tuple[int, int] | None = None
    relation: str | None = None
    rep: int = 0


def _prompt_id(kind: str, split: str, text: str, rep: int) -> str:
    payload = f"{kind}|{split}|{text}|{rep}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _make_prompt(kind, split, text, setting, categories, **fields) -> PromptSpec:
    rep = fields.pop("rep", 0)
    return PromptSpec(
        id=_prompt_id(kind, split, text, rep),
        kind=kind,
        split=split,
        text=text,
        setting=setting,
        categories=tuple(categories),
        rep=rep,
        **fields,
    )


def pluralize(category: CategoryEntry, quantity: int) -> str:
    """Quantity one keeps the singular with its article; more gets the
    catalog plural (irregulars like fish/dice stay unchanged there)."""
    if quantity < 1:
        raise CorpusError(f"quantity {quantity} out of range")
    return category.form(quantity)


def compose_numerical(catalog: Catalog, quantities, splits) -> list[PromptSpec]:
    prompts = []
    for quantity in quantities:
        if not 2 <= quantity <= 8:
            raise CorpusError(f"quantity {quantity} outside 2..8")
    for split in splits:
        categories = catalog.categories_for(split)
        settings = catalog.settings_for(split)
        for category in categories:
            for quantity in quantities:
                kind = "numerical" if quantity <= 6 else "out_of_scope"
                for setting in settings:
                    text = (
                        f"{quantity_word(quantity)} {category.plural}, "
                        f"{setting.render()}"
                    )
                    prompts.append(
                        _make_prompt(
                            kind, split, text, setting, (category,),
                            quantity=quantity,
                        )
                    )
    return prompts


def propose_spatial_scenes(
    catalog: Catalog, relation: str, count: int, split: str = "train",
    rng_seed: int = 0,
) -> list[SpatialScene]:
    """Draw `count` distinct ordered (subject, object) pairs from one split.

    The pair universe is shuffled with a local RNG so the draw is
    reproducible; asking for more than n*(n-1) pairs caps the result with a
    warning rather than failing.
    """
    if relation not in RELATIONS:
        raise CorpusError(f"unknown relation {relation!r}")
    categories = catalog.categories_for(split)
    universe = [
        (s, o) for s in categories for o in categories if s.name != o.name
    ]
    rng = random.Random(rng_seed)
    rng.shuffle(universe)
    if count > len(universe):
        log.warning(
            "relation %s: requested %d scenes, only %d distinct pairs",
            relation, count, len(universe),
        )
        count = len(universe)
    return [SpatialScene(s, o, relation) for s, o in universe[:count]]


def filter_scenes(scenes, gate) -> list[SpatialScene]:
    """Apply a plausibility gate and keep only scenes it affirms.

    The gate is called per scene and may return a bare verdict
    (True/False/None) or a (verdict, justification) tuple. A gate exception
    marks that scene unknown and moves on; unknown is excluded.
    """
    kept = []
    for scene in scenes:
        try:
            result = gate(scene)
        except Exception as exc:  # one bad scene must not kill the batch
            log.warning("gate failed on %r: %s", scene.render(), exc)
            result = (None, f"gate error: {exc}")
        if isinstance(result, tuple):
            verdict, justification = result
        else:
            verdict, justification = result, ""
        scene.plausible = verdict
        scene.justification = justification
        if verdict is True:
            kept.append(scene)
    return kept


def build_spatial_scenes(
    catalog: Catalog, relation: str, quota: int, gate, split: str = "train",
    rng_seed: int = 0,
) -> list[SpatialScene]:
    """Propose and gate scenes in growing batches until `quota` survive."""
    batch = max(quota * 2, 64)
    proposed = propose_spatial_scenes(catalog, relation, batch, split, rng_seed)
    kept = filter_scenes(proposed, gate)
    categories = catalog.categories_for(split)
    limit = len(categories) * (len(categories) - 1)
    while len(kept) < quota and len(proposed) < limit:
        batch = min(batch * 2, limit)
        proposed = propose_spatial_scenes(catalog, relation, batch, split, rng_seed)
        kept = filter_scenes(proposed, gate)
    if len(kept) < quota:
        raise QuotaShortfallError(relation, quota, len(kept))
    return kept[:quota]


def compose_spatial(scenes, settings, quota_per_relation: int) -> list[PromptSpec]:
    split = None
    by_relation = {r: [] for r in RELATIONS}
    for scene in scenes:
        if split is None:
            split = scene.split
        elif scene.split != split:
            raise CorpusError("scenes mix category splits")
        by_relation[scene.relation].append(scene)
    for setting in settings:
        if setting.split != split:
            raise CorpusError("setting split does not match scene split")
    prompts = []
    for relation in RELATIONS:
        chosen = by_relation[relation]
        if not chosen:
            continue  # single-relation scene lists are fine
        if len(chosen) < quota_per_relation:
            raise QuotaShortfallError(relation, quota_per_relation, len(chosen))
        for scene in chosen[:quota_per_relation]:
            for setting in settings:
                text = f"{scene.render()}, {setting.render()}"
                prompts.append(
                    _make_prompt(
                        "spatial", split, text, setting,
                        (scene.subject, scene.object),
                        relation=relation,
                    )
                )
    return prompts


def compose_multi_category(
    catalog: Catalog, pairs=None, quantity_pairs=None, settings=None,
) -> list[PromptSpec]:
    if pairs is None:
        pairs = DEFAULT_CATEGORY_PAIRS
    if quantity_pairs is None:
        quantity_pairs = default_quantity_pairs()
    resolved = [(catalog.category(a), catalog.category(b)) for a, b in pairs]
    split = resolved[0][0].split
    for a, b in resolved:
        if a.split != split or b.split != split:
            raise CorpusError("category pairs mix splits")
    if settings is None:
        settings = catalog.settings_for(split)
    for setting in settings:
        if setting.split != split:
            raise CorpusError("setting split does not match pair split")
    for x, y in quantity_pairs:
        if x < 1 or y < 1:
            raise CorpusError(f"quantity pair ({x},{y}) must be >= 1 each")
    prompts = []
    for setting in settings:
        for a, b in resolved:
            for x, y in quantity_pairs:
                first = (
                    f"{quantity_word(x)} {a.plural}" if x >= 2
                    else f"{a.article.capitalize()} {a.name}"
                )
                second = (
                    f"{ONES[y]} {b.plural}" if y >= 2
                    else f"{b.article} {b.name}"
                )
                text = f"{first} and {second}, {setting.render()}"
                prompts.append(
                    _make_prompt(
                        "multi_category", split, text, setting, (a, b),
                        quantity_pair=(x, y),
                    )
                )
    return prompts


# ---------------------------------------------------------------------------
# Offline plausibility gate.
#
# Coarse size classes (1 hand-held .. 5 building-scale) for every catalog
# category. Stacking is ruled implausible when the thing on top is at least
# two classes larger than its support; side-by-side placement is always fine.

SIZE_CLASS = {
    "apple": 1, "fish": 2, "envelope": 1, "flamingo": 2, "laptop": 2,
    "camera": 2, "carrot": 1, "dolphin": 3, "marble": 1, "snail": 1,
    "teapot": 1, "coin": 1, "monkey": 2, "otter": 2, "parrot": 2,
    "dice": 1, "duck": 2, "lemon": 1, "mug": 1, "candle": 1,
    "motorcycle": 3, "tent": 3, "horse": 4, "star": 1, "turtle": 2,
    "watermelon": 2, "zucchini": 1, "notebook": 1, "boat": 4, "raccoon": 2,
    "phone": 1, "pyramid": 5, "car": 4, "house": 5, "windmill": 5,
    "jellyfish": 2, "guitar": 2, "cat": 2, "kangaroo": 3, "knife": 1,
    "pillow": 2, "bus": 5, "clock": 2, "brush": 1, "flower": 1,
    "koala": 2, "bulb": 1, "orange": 1, "gorilla": 3, "hamburger": 1,
    "strawberry": 1, "owl": 2, "pineapple": 2, "pumpkin": 2, "bottle": 1,
    "tree": 4, "umbrella": 2, "vase": 2, "whale": 5, "mushroom": 1,
    "octopus": 2, "unicorn": 4, "ant": 1, "basketball": 2, "cup": 1,
    "spoon": 1, "tiger": 3, "penguin": 2, "rabbit": 2, "dog": 2,
    "elephant": 4, "hat": 2, "airplane": 5, "basket": 2, "ukulele": 2,
    "volleyball": 2, "watch": 1, "feather": 1, "pearl": 1, "clam": 1,
    "drone": 2, "bird": 2, "egg": 1, "bowl": 1, "chair": 3,
    "table": 3, "dove": 2, "crow": 2, "panda": 3, "butterfly": 1,
}


def heuristic_gate(scene: SpatialScene):
    """Offline stand-in for an LLM plausibility check."""
    subj = SIZE_CLASS[scene.subject.name]
    obj = SIZE_CLASS[scene.object.name]
    if scene.relation == "top" and subj - obj >= 2:
        return False, "subject too large for its support"
    if scene.relation == "under" and obj - subj >= 2:
        return False, "object too large to rest on the subject"
    if scene.relation in ("left", "right"):
        return True, "side-by-side placement is unconstrained"
    return True, "size-compatible arrangement"


# ---------------------------------------------------------------------------
# Whole-corpus assembly and JSONL round trip.


def build_corpus(
    catalog: Catalog, rng_seed: int = 0, gate=heuristic_gate,
    out_of_scope_target: int = 240,
) -> dict[str, list[PromptSpec]]:
    """Build every prompt family. Deterministic in (catalog, rng_seed, gate)."""
    corpus: dict[str, list[PromptSpec]] = {}
    numerical = compose_numerical(catalog, IN_SCOPE_QUANTITIES, ("train", "test"))
    corpus["numerical"] = numerical

    spatial = []
    quotas = {"train": 80, "test": 40}
    for split_index, split in enumerate(("train", "test")):
        scenes = []
        for rel_index, relation in enumerate(RELATIONS):
            scenes.extend(
                build_spatial_scenes(
                    catalog, relation, quotas[split], gate, split,
                    rng_seed=rng_seed * 1000 + split_index * 100 + rel_index,
                )
            )
        spatial.extend(
            compose_spatial(scenes, catalog.settings_for(split), quotas[split])
        )
    corpus["spatial"] = spatial

    corpus["multi_category"] = compose_multi_category(catalog)

    out_of_scope = compose_numerical(catalog, OUT_OF_SCOPE_QUANTITIES, ("test",))
    if out_of_scope_target < len(out_of_scope):
        out_of_scope = out_of_scope[:out_of_scope_target]
    elif out_of_scope_target > len(out_of_scope):
        base = len(out_of_scope)
        for i in range(out_of_scope_target - base):
            src = out_of_scope[i % base]
            out_of_scope.append(
                _make_prompt(
                    src.kind, src.split, src.text, src.setting,
                    src.categories, quantity=src.quantity,
                    rep=1 + i // base,
                )
            )
    corpus["out_of_scope"] = out_of_scope
    return corpus


def prompt_to_record(prompt: PromptSpec) -> dict:
    return {
        "id": prompt.id,
        "kind": prompt.kind,
        "split": prompt.split,
        "text": prompt.text,
        "setting": prompt.setting.index,
        "categories": [c.name for c in prompt.categories],
        "quantity": prompt.quantity,
        "quantity_pair": list(prompt.quantity_pair) if prompt.quantity_pair else None,
        "relation": prompt.relation,
        "rep": prompt.rep,
    }


def prompt_from_record(record: dict, catalog: Catalog) -> PromptSpec:
    setting = next(
        (s for s in catalog.settings if s.index == record["setting"]), None
    )
    if setting is None:
        raise ParseError(f"unknown setting index {record['setting']}")
    categories = tuple(catalog.category(n) for n in record["categories"])
    pair = record.get("quantity_pair")
    prompt = PromptSpec(
        id=record["id"],
        kind=record["kind"],
        split=record["split"],
        text=record["text"],
        setting=setting,
        categories=categories,
        quantity=record.get("quantity"),
        quantity_pair=tuple(pair) if pair else None,
        relation=record.get("relation"),
        rep=record.get("rep", 0),
    )
    expected = _prompt_id(prompt.kind, prompt.split, prompt.text, prompt.rep)
    if prompt.id != expected:
        raise ParseError(f"prompt id {prompt.id} does not match its fields")
    return prompt


def write_prompts(prompts, path):
    with open(path, "w", encoding="utf-8") as fh:
        for prompt in prompts:
            fh.write(json.dumps(prompt_to_record(prompt), ensure_ascii=False,
                                separators=(",", ":")) + "\n")


def load_prompts(path, catalog: Catalog) -> list[PromptSpec]:
    prompts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                prompts.append(prompt_from_record(record, catalog))
            except (ParseError, KeyError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return prompts


# ---------------------------------------------------------------------------
# Text -> fields (the inverse of composition, used for round-trip checks and
# by the simulator to recover what a prompt asked for).

_PHRASES_LONGEST_FIRST = sorted(
    PHRASE_TO_RELATION, key=len, reverse=True
)

_QUANTITY_WORDS = {w.capitalize(): i for i, w in enumerate(ONES[1:9], start=1)}
_MULTI_WORDS = {w: i for i, w in enumerate(ONES[1:6], start=1)}


def parse_prompt(text: str, catalog: Catalog) -> dict:
    """Recover structured fields from a generated prompt's text."""
    if ", " not in text:
        raise ParseError(f"no setting clause in {text!r}")
    head, setting_text = text.rsplit(", ", 1)
    setting = catalog.setting_by_text(setting_text)
    if setting is None:
        raise ParseError(f"unknown setting {setting_text!r}")

    for phrase in _PHRASES_LONGEST_FIRST:
        m = re.fullmatch(
            rf"(An?) (\w+) {re.escape(phrase)} (an?) (\w+)", head
        )
        if m:
            subject = catalog.category(m.group(2))
            obj = catalog.category(m.group(4))
            return {
                "kind": "spatial",
                "relation": PHRASE_TO_RELATION[phrase],
                "categories": [subject.name, obj.name],
                "setting": setting.index,
                "quantity": None,
                "quantity_pair": None,
            }

    if " and " in head:
        first, second = head.split(" and ", 1)

        def part(fragment, words):
            token, _, rest = fragment.partition(" ")
            if token.lower() in ("a", "an"):
                return 1, catalog.category(rest)
            if token in words:
                entry = catalog.category_by_plural(rest)
                if entry is None:
                    raise ParseError(f"unknown plural {rest!r}")
                return words[token], entry
            raise ParseError(f"bad quantity token {token!r}")

        x, a = part(first, {w.capitalize(): v for w, v in _MULTI_WORDS.items()})
        y, b = part(second, _MULTI_WORDS)
        return {
            "kind": "multi_category",
            "categories": [a.name, b.name],
            "setting": setting.index,
            "quantity": None,
            "quantity_pair": (x, y),
            "relation": None,
        }

    token, _, rest = head.partition(" ")
    if token in _QUANTITY_WORDS:
        entry = catalog.category_by_plural(rest)
        if entry is None:
            raise ParseError(f"unknown plural {rest!r}")
        quantity = _QUANTITY_WORDS[token]
        return {
            "kind": "numerical" if quantity <= 6 else "out_of_scope",
            "categories": [entry.name],
            "setting": setting.index,
            "quantity": quantity,
            "quantity_pair": None,
            "relation": None,
        }
    raise ParseError(f"unrecognized prompt {text!r}")


def task_of(prompt: PromptSpec) -> tuple[str, object]:
    """Task key a prompt contributes to: numerical tasks are keyed by the
    target count (two-category prompts fold into the combined count), spatial
    tasks by relation."""
    if prompt.kind in ("numerical", "out_of_scope"):
        return ("numerical", prompt.quantity)
    if prompt.kind == "spatial":
        return ("spatial", prompt.relation)
    if prompt.kind == "multi_category":
        return ("numerical", prompt.quantity_pair[0] + prompt.quantity_pair[1])
    raise CorpusError(f"unknown prompt kind {prompt.kind!r}")
