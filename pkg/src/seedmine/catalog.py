"""Object-category and background-setting catalog.

The bundled catalog carries 90 object categories (60 train / 30 test) and 12
background settings (8 train / 4 test) in a line-oriented text format:

    index|name|plural|article|split      (categories, 5 fields)
    index|text|split                     (settings, 3 fields)

Comment lines start with '#'. Every prompt builder resolves categories and
settings through this module, so integrity is checked once at load time.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from functools import lru_cache

from .errors import CatalogError

VOWELS = "aeiou"

# Vowel-initial names whose leading phoneme is a consonant ("yoo-").
ARTICLE_EXCEPTIONS = {"unicorn": "a", "ukulele": "a"}

SPLITS = ("train", "test")

EXPECTED_CATEGORIES = {"train": 60, "test": 30}
EXPECTED_SETTINGS = {"train": 8, "test": 4}


@dataclass(frozen=True)
class CategoryEntry:
    index: int
    name: str
    plural: str
    article: str
    split: str

    def form(self, quantity: int) -> str:
        """Surface form used inside a prompt: singular with article for one,
        bare plural otherwise."""
        if quantity == 1:
            return f"{self.article} {self.name}"
        return self.plural


@dataclass(frozen=True)
class BackgroundSetting:
    index: int
    text: str
    split: str

    def render(self) -> str:
        """Setting as it appears after the comma in a prompt: leading letter
        lowercased, interior capitalization preserved."""
        return self.text[0].lower() + self.text[1:]


class Catalog:
    def __init__(self, categories, settings):
        self.categories = list(categories)
        self.settings = list(settings)
        self._by_name = {c.name: c for c in self.categories}
        self._by_plural = {c.plural: c for c in self.categories}

    def categories_for(self, split: str) -> list[CategoryEntry]:
        return [c for c in self.categories if c.split == split]

    def settings_for(self, split: str) -> list[BackgroundSetting]:
        return [s for s in self.settings if s.split == split]

    def category(self, name: str) -> CategoryEntry:
        try:
            return self._by_name[name]
        except KeyError:
            raise CatalogError(f"unknown category {name!r}") from None

    def category_by_plural(self, plural: str) -> CategoryEntry | None:
        return self._by_plural.get(plural)

    def setting_by_text(self, text: str) -> BackgroundSetting | None:
        lowered = text[0].lower() + text[1:] if text else text
        for s in self.settings:
            if s.render() == lowered:
                return s
        return None

    def validate(self):
        """Raise CatalogError unless counts, uniqueness, and articles hold."""
        for split, want in EXPECTED_CATEGORIES.items():
            got = len(self.categories_for(split))
            if got != want:
                raise CatalogError(
                    f"expected {want} {split} categories, found {got}"
                )
        for split, want in EXPECTED_SETTINGS.items():
            got = len(self.settings_for(split))
            if got != want:
                raise CatalogError(
                    f"expected {want} {split} settings, found {got}"
                )
        for field, items in (
            ("category index", [c.index for c in self.categories]),
            ("category name", [c.name for c in self.categories]),
            ("setting index", [s.index for s in self.settings]),
            ("setting text", [s.text for s in self.settings]),
        ):
            seen = set()
            for value in items:
                if value in seen:
                    raise CatalogError(f"duplicate {field} {value!r}")
                seen.add(value)
        for c in self.categories:
            if c.article != expected_article(c.name):
                raise CatalogError(
                    f"category {c.name!r}: article {c.article!r} does not "
                    f"match leading phoneme (expected {expected_article(c.name)!r})"
                )


def expected_article(name: str) -> str:
    if name in ARTICLE_EXCEPTIONS:
        return ARTICLE_EXCEPTIONS[name]
    return "an" if name[0].lower() in VOWELS else "a"


def load_catalog(path, validate: bool = True) -> Catalog:
    with open(path, encoding="utf-8") as fh:
        return parse_catalog(fh.read(), validate=validate)


def parse_catalog(text: str, validate: bool = True) -> Catalog:
    categories, settings = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) == 5:
            idx, name, plural, article, split = fields
            if split not in SPLITS:
                raise CatalogError(f"unknown split {split!r}", line=lineno)
            if article not in ("a", "an"):
                raise CatalogError(f"bad article {article!r}", line=lineno)
            try:
                index = int(idx)
            except ValueError:
                raise CatalogError(f"bad index {idx!r}", line=lineno) from None
            categories.append(CategoryEntry(index, name, plural, article, split))
        elif len(fields) == 3:
            idx, text_field, split = fields
            if split not in SPLITS:
                raise CatalogError(f"unknown split {split!r}", line=lineno)
            try:
                index = int(idx)
            except ValueError:
                raise CatalogError(f"bad index {idx!r}", line=lineno) from None
            settings.append(BackgroundSetting(index, text_field, split))
        else:
            raise CatalogError(
                f"expected 3 or 5 pipe-separated fields, got {len(fields)}",
                line=lineno,
            )
    catalog = Catalog(categories, settings)
    if validate:
        catalog.validate()
    return catalog


@lru_cache(maxsize=1)
def default_catalog() -> Catalog:
    data = importlib.resources.files("seedmine.data").joinpath("comp90.txt")
    return parse_catalog(data.read_text(encoding="utf-8"))
