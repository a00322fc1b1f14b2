#!/usr/bin/env python3
"""Independent computation of the eval fixture's expected scorecard.

Implements the metric formulas from first principles, deliberately
without importing the package, and freezes the results into
fixtures/eval_expected.json. Run from the repository root:

    python3 tests/oracles/eval_oracle.py

The acceptance suite compares the package's scoring of the same fixture
against this file to 1e-9.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent.parent
FIXTURES = ROOT / "fixtures"

NOVELTY_THRESHOLD = 0.6

# Minimal recognizers covering every entity value the fixture uses.
ENTITY_PATTERNS = {
    "ipv4": r"(?<![\d.])(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)(?:\.(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)){3}(?![\d.])",
    "email": r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b",
    "sha256": r"\b[0-9A-Fa-f]{64}\b",
}

REFERENCE_PHRASES = [
    "this IP address", "these IP addresses",
    "this IPv6 address", "these IPv6 addresses",
    "this email address", "these email addresses",
    "this GUID", "these GUIDs",
    "this file hash", "these file hashes",
    "this MD5 hash", "these MD5 hashes",
    "this domain", "these domains",
    "this file path", "these file paths",
    "this CVE", "these CVEs",
    "this user", "these users",
    "this value", "these values",
]


def tokens(text):
    return re.findall(r"[a-z0-9]+", text.lower())


def trigrams(text):
    normalized = " ".join(tokens(text))
    return {normalized[i : i + 3] for i in range(len(normalized) - 2)}


def similarity(a, b):
    if len(tokens(a)) < 3 or len(tokens(b)) < 3:
        return 1.0 if a.casefold() == b.casefold() else 0.0
    ta, tb = trigrams(a), trigrams(b)
    return len(ta & tb) / len(ta | tb)


def novelty(prompt, turns):
    for turn in turns:
        if turn["role"] == "user" and similarity(prompt, turn["text"]) >= NOVELTY_THRESHOLD:
            return 0.0
        if turn["role"] == "assistant" and prompt.casefold() in turn["text"].casefold():
            return 0.0
    return 1.0


def entities(text):
    # domain/email compare case-folded; the other kinds compare exactly
    found = []
    for kind, pattern in ENTITY_PATTERNS.items():
        for m in re.finditer(pattern, text):
            value = m.group(0)
            found.append((kind, value.casefold() if kind == "email" else value))
    return found


def grounding(prompt, turns):
    history = set()
    for turn in turns:
        history.update(entities(turn["text"]))
    extracted = entities(prompt)
    n_refs = 0
    lowered = prompt.lower()
    for phrase in REFERENCE_PHRASES:
        n_refs += lowered.count(phrase.lower())
    total = len(extracted) + n_refs
    if total == 0:
        return 1.0
    grounded = sum(1 for e in extracted if e in history) + n_refs
    return grounded / total


def judge(skill, sample):
    consistent = sample.get("consistent_skill_ids") or [
        t["invoked_skill"] for t in sample["turns"] if t.get("invoked_skill")
    ]
    return 1.0 if skill in consistent else 0.5


def main():
    samples = [
        json.loads(line)
        for line in (FIXTURES / "eval_samples.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    per_sample = []
    rows = {}
    alignment_pairs = []
    for sample in samples:
        scores = []
        for suggestion in sample["suggestions"]:
            prompt, skill = suggestion["prompt"], suggestion["skill"]
            j = judge(skill, sample)
            scores.append(
                {
                    "novelty": novelty(prompt, sample["turns"]),
                    "grounding": grounding(prompt, sample["turns"]),
                    "usefulness": j,
                    "clarity": j,
                    "relevance": j,
                }
            )
        per_sample.append({"session_id": sample["session_id"], "scores": scores})
        rows.setdefault(sample.get("config_tag", ""), []).extend(scores)
        if sample.get("predicted_skills") is not None:
            alignment_pairs.extend(
                (s["skill"], p) for s, p in zip(sample["suggestions"], sample["predicted_skills"])
            )

    def means(scores):
        return {
            metric: sum(s[metric] for s in scores) / len(scores)
            for metric in ("novelty", "grounding", "usefulness", "clarity", "relevance")
        }

    all_scores = [s for sample in per_sample for s in sample["scores"]]
    alignment = (
        100.0 * sum(1 for a, b in alignment_pairs if a == b) / len(alignment_pairs)
        if alignment_pairs
        else None
    )
    expected = {
        "overall": {"n_suggestions": len(all_scores), **means(all_scores)},
        "rows": {tag: {"n_suggestions": len(scores), **means(scores)} for tag, scores in sorted(rows.items())},
        "per_sample": per_sample,
        "skill_alignment_pct": alignment,
    }
    out = FIXTURES / "eval_expected.json"
    out.write_text(json.dumps(expected, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    print(json.dumps(expected["overall"], indent=2))


if __name__ == "__main__":
    main()
