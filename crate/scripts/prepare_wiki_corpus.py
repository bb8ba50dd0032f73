#!/usr/bin/env python3
"""Turn a MediaWiki XML dump (optionally .bz2) into a plain-text corpus.

Output: one lowercased sentence per line, whitespace-tokenized, ASCII
letters/digits only. Used to build data/wiki-sample.txt.gz.

    python3 scripts/prepare_wiki_corpus.py dump.xml.bz2 out.txt
    python3 scripts/prepare_wiki_corpus.py --chunk 20 articles.cor out.txt

With --chunk N the input is already one tokenized article per line and is
only re-cut into lines of N tokens.
"""
import bz2
import html
import re
import sys

TEXT_RE = re.compile(r"<text[^>]*>(.*?)</text>", re.S)
TEMPLATE_RE = re.compile(r"\{\{[^{}]*\}\}")
TABLE_RE = re.compile(r"\{\|.*?\|\}", re.S)
REF_RE = re.compile(r"<ref[^>/]*/>|<ref[^>]*>.*?</ref>", re.S)
COMMENT_RE = re.compile(r"<!--.*?-->", re.S)
TAG_RE = re.compile(r"<[^>]+>")
FILE_LINK_RE = re.compile(r"\[\[(?:file|image|category|[a-z\-]{2,12}):[^\[\]]*(?:\[\[[^\[\]]*\]\][^\[\]]*)*\]\]", re.I)
LINK_RE = re.compile(r"\[\[(?:[^|\[\]]*\|)?([^\[\]]*)\]\]")
EXT_LINK_RE = re.compile(r"\[https?://[^\s\]]*\s?([^\]]*)\]")
URL_RE = re.compile(r"https?://\S+")
SENT_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


def clean_article(raw):
    text = html.unescape(raw)
    text = COMMENT_RE.sub(" ", text)
    text = REF_RE.sub(" ", text)
    for _ in range(4):
        text = TEMPLATE_RE.sub(" ", text)
    text = TABLE_RE.sub(" ", text)
    text = FILE_LINK_RE.sub(" ", text)
    text = LINK_RE.sub(r"\1", text)
    text = EXT_LINK_RE.sub(r"\1", text)
    text = URL_RE.sub(" ", text)
    text = TAG_RE.sub(" ", text)
    text = text.replace("'''", "").replace("''", "")
    out = []
    for line in text.split("\n"):
        line = line.strip()
        if not line or line[0] in "=*#:;|!{}":
            continue
        for sent in SENT_SPLIT_RE.split(line):
            toks = TOKEN_RE.findall(sent.lower())
            if toks:
                out.append(" ".join(toks))
    return out


def chunk_lines(src, dst, size):
    n = 0
    with open(src, encoding="utf-8") as f, open(dst, "w", encoding="utf-8") as out:
        for line in f:
            toks = TOKEN_RE.findall(line.lower())
            for i in range(0, len(toks), size):
                out.write(" ".join(toks[i:i + size]) + "\n")
                n += 1
    print(f"{n} lines", file=sys.stderr)


def main():
    if sys.argv[1] == "--chunk":
        chunk_lines(sys.argv[3], sys.argv[4], int(sys.argv[2]))
        return
    src, dst = sys.argv[1], sys.argv[2]
    opener = bz2.open if src.endswith(".bz2") else open
    with opener(src, "rt", encoding="utf-8") as f:
        dump = f.read()
    n = 0
    with open(dst, "w", encoding="utf-8") as out:
        for m in TEXT_RE.finditer(dump):
            if m.group(1).lstrip().lower().startswith("#redirect"):
                continue
            for sent in clean_article(m.group(1)):
                out.write(sent + "\n")
                n += 1
    print(f"{n} sentences", file=sys.stderr)


if __name__ == "__main__":
    main()
