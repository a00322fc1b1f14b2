#!/usr/bin/env python3
"""Regenerate the bundled telemetry and alignment fixtures.

Run from the repository root:  python3 scripts/make_fixtures.py
Deterministic: running it twice produces identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Per-session skill invocation sequences; adjacent pairs become transitions.
SESSIONS: dict[str, list[str]] = {
    "s01": ["GetSignIns", "GetSecurityAlerts", "GetIncidents"],
    "s02": ["GetSignIns", "GetSecurityAlerts"],
    "s03": ["GetSignIns", "GetAuditLogs"],
    "s04": ["GetSignIns", "GetRiskyUsers", "GetRiskyUserSummary"],
    "s05": ["GetSignIns", "GetSecurityAlerts", "GetRiskyUsers"],
    "s06": ["GetSignIns", "GetRiskyUsers"],
    "s07": ["GetSignIns", "GetRiskyUserSummary"],
    "s08": ["LookupIndicator", "RunHuntingQuery"],
    "s09": ["GetDlpAlerts", "FindSensitiveFiles"],
    "s10": ["GetDeviceCompliance", "GetManagedDevices"],
    "s11": ["GetSecurityAlerts", "GetIncidents"],
    "s12": ["GenerateKqlQuery"],
}


def make_telemetry() -> None:
    lines = []
    ts = 1700000000000
    counter = 0
    for session_id, skills in SESSIONS.items():
        for skill in skills:
            counter += 1
            ts += 60000
            lines.append(
                {
                    "event_id": f"evt-{counter:04d}",
                    "session_id": session_id,
                    "timestamp_ms": ts,
                    "kind": "suggestion_clicked",
                    "skill_id": skill,
                    "suggestion_text": f"(clicked a suggestion for {skill})",
                }
            )
            counter += 1
            ts += 1000
            lines.append(
                {
                    "event_id": f"evt-{counter:04d}",
                    "session_id": session_id,
                    "timestamp_ms": ts,
                    "kind": "skill_invoked",
                    "skill_id": skill,
                }
            )
    out = FIXTURES / "telemetry_events.jsonl"
    out.write_text("".join(json.dumps(l, sort_keys=True) + "\n" for l in lines), encoding="utf-8")
    print(f"wrote {out} ({len(lines)} events)")


def make_alignment_pairs() -> None:
    # 50 (suggested, predicted) pairs with exactly 31 matches -> 62.0%
    skills = ["GetSignIns", "GetSecurityAlerts", "GetAuditLogs", "GetRiskyUsers", "LookupIndicator"]
    pairs = []
    for i in range(50):
        suggested = skills[i % len(skills)]
        if i < 31:
            predicted = suggested
        else:
            predicted = skills[(i + 1) % len(skills)]
        pairs.append([suggested, predicted])
    out = FIXTURES / "alignment_pairs.json"
    out.write_text(json.dumps({"pairs": pairs}, indent=2) + "\n", encoding="utf-8")
    matches = sum(1 for a, b in pairs if a == b)
    print(f"wrote {out} ({len(pairs)} pairs, {matches} matches)")


def make_session_example() -> None:
    doc = {
        "session_id": "demo-session",
        "turns": [
            {"index": 0, "role": "user", "text": "show me sign-ins from 10.0.0.5 since yesterday"},
            {
                "index": 1,
                "role": "assistant",
                "text": "Here are the recent sign-ins from 10.0.0.5: bob@contoso.com signed in 14 times.",
                "invoked_skill": "GetSignIns",
            },
        ],
        "profile": {
            "user_id": "analyst-7",
            "role_tag": "soc_analyst",
            "org_tag": "contoso",
            "preferred_plugin_ids": ["Entra"],
        },
    }
    out = FIXTURES / "session_example.json"
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    make_telemetry()
    make_alignment_pairs()
    make_session_example()
