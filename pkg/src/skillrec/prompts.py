"""Prompt templates for skill selection, suggestion generation, and
rubric judging, plus parsers for the structured replies they request.

Every template opens with a ``TASK:`` marker line and renders its inputs
in fixed sections, so rendering is byte-deterministic and the offline
mock provider can parse the same document a remote model sees.
"""

from __future__ import annotations

import json
import re

TASK_SELECT_SKILLS = "select_skills"
TASK_GENERATE_SUGGESTIONS = "generate_suggestions"
TASK_JUDGE_SUGGESTION = "judge_suggestion"

SYSTEM_SUGGEST = (
    "You write next-prompt suggestions for a domain-specific AI assistant. "
    "Every suggestion must target one of the listed skills and read like a "
    "prompt the user would naturally send next."
)

SYSTEM_SELECT = (
    "You route user queries to the most relevant skills of a domain-specific "
    "AI assistant. Answer with ids only, exactly as listed."
)

SYSTEM_JUDGE = (
    "You are a strict evaluator of prompt suggestions for a domain-specific "
    "AI assistant. Apply the rubric exactly and answer with the level only."
)

# Three-level judging rubrics, one per LLM-scored metric.
RUBRICS: dict[str, str] = {
    "usefulness": (
        "Level 0 - Completely Useless: The prompt diverges from user tasks and "
        "provides no relevant information and does not connect with the "
        "conversation history, thereby failing to assist the user in any "
        "meaningful way.\n"
        "Level 1 - Somewhat Useful: The prompt provides some relevant "
        "information and offers partial assistance. While it might not be "
        "directly related to the conversation history, it still seeks "
        "information that can help the customer complete tasks or expand "
        "their activities.\n"
        "Level 2 - Highly Useful: The prompt suggests key information that is "
        "directly relevant to the user's tasks. It significantly helps the "
        "user in completing their tasks efficiently and effectively."
    ),
    "clarity": (
        "The prompt must be clear and unambiguous, ensuring no room for "
        "misinterpretation.\n"
        "Level 0: the prompt is unintelligible or self-contradictory.\n"
        "Level 1: the prompt is understandable but leaves room for "
        "misinterpretation.\n"
        "Level 2: the prompt is clear and unambiguous."
    ),
    "relevance": (
        "Evaluates how relevant a suggested prompt is to the conversation "
        "context.\n"
        "Level 0: the prompt is unrelated to the conversation context.\n"
        "Level 1: the prompt is loosely related to the conversation context.\n"
        "Level 2: the prompt follows directly from the conversation context."
    ),
}

_JSON_ARRAY_RE = re.compile(r"\[.*\]", re.DOTALL)
_JSON_OBJECT_RE = re.compile(r"\{.*\}", re.DOTALL)


def build_selection_prompt(context_block: str, candidates: list[tuple[str, str, str]], want: int) -> str:
    """Selection document: candidates are (skill_id, description, example)."""
    lines = [f"TASK: {TASK_SELECT_SKILLS}", f"WANT: {want}", "", "## Context", context_block or "(empty session)", "", "## Candidates"]
    for i, (skill_id, description, example) in enumerate(candidates, start=1):
        lines.append(f"{i}. {skill_id} :: {description} :: e.g. {example}")
    lines += [
        "",
        "## Output format",
        f"Return only a JSON array of exactly {want} skill id strings chosen "
        "from the candidates above, most relevant first.",
    ]
    return "\n".join(lines)


def build_judge_prompt(metric: str, prompt_text: str, skill_id: str, conversation_block: str, invoked_skills: list[str]) -> str:
    if metric not in RUBRICS:
        raise ValueError(f"no rubric for metric {metric!r}")
    invoked = ", ".join(invoked_skills) if invoked_skills else "(none)"
    return "\n".join(
        [
            f"TASK: {TASK_JUDGE_SUGGESTION}",
            f"METRIC: {metric}",
            "",
            "## Rubric",
            RUBRICS[metric],
            "",
            "## Conversation",
            conversation_block or "(empty session)",
            "",
            f"## Skills exercised in this conversation",
            invoked,
            "",
            "## Suggestion",
            f"PROMPT: {prompt_text}",
            f"SKILL: {skill_id}",
            "",
            "## Output format",
            'Return only a JSON object {"level": 0, 1, or 2}.',
        ]
    )


def extract_json_array(text: str) -> list | None:
    """Pull the first JSON array out of a reply; None if there is none."""
    m = _JSON_ARRAY_RE.search(text)
    if m is None:
        return None
    try:
        parsed = json.loads(m.group(0))
    except json.JSONDecodeError:
        return None
    return parsed if isinstance(parsed, list) else None


def extract_json_object(text: str) -> dict | None:
    m = _JSON_OBJECT_RE.search(text)
    if m is None:
        return None
    try:
        parsed = json.loads(m.group(0))
    except json.JSONDecodeError:
        return None
    return parsed if isinstance(parsed, dict) else None


def parse_marker(text: str, marker: str) -> str | None:
    """Value of a ``MARKER: value`` line, or None."""
    m = re.search(rf"^{re.escape(marker)}:\s*(.+)$", text, re.MULTILINE)
    return m.group(1).strip() if m else None


def parse_numbered_ids(text: str, section: str) -> list[str]:
    """Ids from ``N. id :: ...`` lines under a ``## section`` heading."""
    ids: list[str] = []
    in_section = False
    for line in text.splitlines():
        if line.startswith("## "):
            in_section = line[3:].strip().startswith(section)
            continue
        if in_section:
            m = re.match(r"^\d+\.\s+(\S+)\s+::", line)
            if m:
                ids.append(m.group(1))
    return ids


def parse_example_lines(text: str, section: str) -> dict[str, str]:
    """First ``- id :: example`` line per id under a ``## section`` heading."""
    examples: dict[str, str] = {}
    in_section = False
    for line in text.splitlines():
        if line.startswith("## "):
            in_section = line[3:].strip().startswith(section)
            continue
        if in_section:
            m = re.match(r"^-\s+(\S+)\s+::\s+(.*)$", line)
            if m and m.group(1) not in examples:
                examples[m.group(1)] = m.group(2)
    return examples
