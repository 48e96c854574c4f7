"""The five supported languages, their scripts and their special tokens.

Each language maps to exactly one Unicode script block and one special
vocabulary token. The token names the OUTPUT language of a training pair
and doubles as the decoder's start symbol.
"""
from __future__ import annotations

import enum


class Language(str, enum.Enum):
    ENGLISH = "english"
    HINDI = "hindi"
    BENGALI = "bengali"
    TAMIL = "tamil"
    KANNADA = "kannada"

    @property
    def token(self) -> str:
        return f"<{self.value}>"

    @property
    def script_range(self) -> tuple[int, int]:
        return _SCRIPT_RANGES[self]

    def in_script(self, char: str) -> bool:
        lo, hi = _SCRIPT_RANGES[self]
        return lo <= ord(char) <= hi

    @classmethod
    def from_name(cls, name: str) -> "Language":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise UnknownLanguageError(name) from None

    @classmethod
    def from_token(cls, token: str) -> "Language":
        lang = _TOKEN_TO_LANG.get(token)
        if lang is None:
            raise UnknownLanguageError(token)
        return lang


class UnknownLanguageError(ValueError):
    def __init__(self, name: str):
        allowed = ", ".join(l.value for l in Language)
        super().__init__(f"unknown language {name!r}; expected one of: {allowed}")
        self.name = name


# Latin is restricted to the upper-case letters: the corpora carry English
# words upper-cased and cleaning upper-cases them before validation.
_SCRIPT_RANGES: dict[Language, tuple[int, int]] = {
    Language.ENGLISH: (0x0041, 0x005A),
    Language.HINDI: (0x0900, 0x097F),
    Language.BENGALI: (0x0980, 0x09FF),
    Language.TAMIL: (0x0B80, 0x0BFF),
    Language.KANNADA: (0x0C80, 0x0CFF),
}

_TOKEN_TO_LANG = {lang.token: lang for lang in Language}

INDIC_LANGUAGES = (Language.HINDI, Language.BENGALI, Language.TAMIL, Language.KANNADA)


def first_foreign_char(word: str, lang: Language) -> str | None:
    """Return the first character of `word` outside `lang`'s script, if any."""
    for ch in word:
        if not lang.in_script(ch):
            return ch
    return None
