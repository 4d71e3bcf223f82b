"""Tokenizer for MiniC source text."""
from __future__ import annotations

from dataclasses import dataclass

from ..diag import E_SYNTAX, Loc, fail

KEYWORDS = {
    "int", "unsigned", "signed", "char", "short", "long", "void",
    "if", "else", "while", "for", "break", "return", "static", "const",
}

# Longest-match first.
_PUNCT = [
    "<<=", ">>=",
    "==", "!=", "<=", ">=", "<<", ">>", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^",
    "(", ")", "{", "}", "[", "]", ";", ",", "?", ":",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'int' | 'kw' | punctuation text | 'eof'
    text: str
    value: int = 0
    offset: int = 0
    loc: Loc = Loc()


def tokenize(src: str, file: str = "<unknown>") -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def loc() -> Loc:
        return Loc(file, line, col)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if src.startswith("//", i):
            j = src.find("\n", i)
            advance((j - i) if j != -1 else (n - i))
            continue
        if src.startswith("/*", i):
            j = src.find("*/", i + 2)
            if j == -1:
                raise fail(E_SYNTAX, "unterminated block comment", loc())
            advance(j + 2 - i)
            continue
        if c.isdigit():
            start, startloc = i, loc()
            if src.startswith(("0x", "0X"), i):
                j = i + 2
                while j < n and src[j] in "0123456789abcdefABCDEF":
                    j += 1
                if j == i + 2:
                    raise fail(E_SYNTAX, "malformed hex literal", startloc)
                value = int(src[i:j], 16)
            else:
                j = i
                while j < n and src[j].isdigit():
                    j += 1
                value = int(src[i:j])
            # Integer suffixes (u/U/l/L) are accepted and ignored.
            while j < n and src[j] in "uUlL":
                j += 1
            if j < n and (src[j].isalpha() or src[j] == "_"):
                raise fail(E_SYNTAX, f"malformed number near {src[start:j+1]!r}", startloc)
            toks.append(Token("int", src[start:j], value, start, startloc))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            start, startloc = i, loc()
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[start:j]
            toks.append(Token("kw" if text in KEYWORDS else "ident", text, 0, start, startloc))
            advance(j - i)
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(Token(p, p, 0, i, loc()))
                advance(len(p))
                break
        else:
            raise fail(E_SYNTAX, f"unexpected character {c!r}", loc())
    toks.append(Token("eof", "", 0, n, loc()))
    return toks
