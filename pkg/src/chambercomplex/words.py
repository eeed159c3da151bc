"""Freely reduced words over signed cut letters.

A word is a tuple of nonzero ints: +k is the k-th cut letter (1-based),
-k its inverse.  Letter k prints as the k-th lowercase letter, its
inverse with a ^-1 suffix ("ab^-1" = (1, -2)).
"""

from __future__ import annotations

import string

from .errors import SpecSyntaxError

Word = tuple  # tuple[int, ...]

EMPTY: Word = ()

_LETTERS = string.ascii_lowercase


def reduce_word(letters) -> Word:
    """Freely reduce: cancel adjacent x x^-1 pairs."""
    out = []
    for a in letters:
        if a == 0:
            raise ValueError("0 is not a letter")
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def is_reduced(word) -> bool:
    return all(word[i] != -word[i + 1] for i in range(len(word) - 1))


def inverse(word: Word) -> Word:
    return tuple(-a for a in reversed(word))


def concat(u: Word, v: Word) -> Word:
    """Reduced product u·v."""
    u = list(u)
    i = 0
    while u and i < len(v) and u[-1] == -v[i]:
        u.pop()
        i += 1
    return tuple(u) + tuple(v[i:])


def is_cyclically_reduced(word: Word) -> bool:
    if not is_reduced(word):
        return False
    return len(word) < 2 or word[0] != -word[-1]


def cyclic_period(word: Word) -> int:
    """Smallest d >= 1 such that rotating the word by d leaves it unchanged.

    Always divides len(word)."""
    r = len(word)
    for d in range(1, r + 1):
        if r % d:
            continue
        if all(word[(i + d) % r] == word[i] for i in range(r)):
            return d
    return r


def letter_key(a: int):
    # a < a^-1 < b < b^-1 < ...
    return (abs(a), 0 if a > 0 else 1)


def word_key(word: Word):
    """Total order: by length, then letterwise."""
    return (len(word), tuple(letter_key(a) for a in word))


def format_letter(a: int) -> str:
    name = _LETTERS[abs(a) - 1] if abs(a) <= 26 else f"x{abs(a)}"
    return name if a > 0 else name + "^-1"


def format_word(word: Word) -> str:
    """Inverse of parse_word; empty word prints as 'e'."""
    if not word:
        return "e"
    return "".join(format_letter(a) for a in word)


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse 'ab^-1' style words.  Whitespace between letters is allowed.

    Raises SpecSyntaxError on malformed input or out-of-range letters;
    the result is freely reduced.
    """
    text = text.strip()
    if text in ("", "e", "1"):
        return EMPTY
    letters = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _LETTERS:
            val = _LETTERS.index(ch) + 1
            i += 1
        elif ch == "x" and i + 1 < len(text) and text[i + 1].isdigit():
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            val = int(text[i + 1:j])
            i = j
        else:
            raise SpecSyntaxError(f"unexpected character {ch!r} in word {text!r}")
        if text[i:i + 3] == "^-1":
            val = -val
            i += 3
        elif text[i:i + 1] == "'":
            val = -val
            i += 1
        if rank is not None and abs(val) > rank:
            raise SpecSyntaxError(f"letter {format_letter(val)} outside cut rank {rank} in {text!r}")
        letters.append(val)
    return reduce_word(letters)
