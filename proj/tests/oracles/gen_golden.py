#!/usr/bin/env python3
# Copyright 2026 The bimath Authors
# SPDX-License-Identifier: Apache-2.0
"""Renders every bundled prompt template with marker bindings
("{{question}}" -> "<<question>>") into tests/golden/.

Flat templates become <id>.txt; message templates become <id>.json holding
[{"role": ..., "text": ...}]. Rendering rules:
  * the template body loses one trailing newline;
  * {{shots}} expands to shot_format per exemplar, in file order;
  * message bodies split on lines that are exactly [System]/[User]/[Assistant],
    each turn trimmed of leading and trailing newlines.

Run from the repo root:  python3 tests/oracles/gen_golden.py
"""
import json
import re
from pathlib import Path

REPO = Path(__file__).resolve().parents[2]
PROMPTS = REPO / "assets" / "prompts"
OUT = REPO / "tests" / "golden"

manifest = json.loads((PROMPTS / "manifest.json").read_text(encoding="utf-8"))
OUT.mkdir(parents=True, exist_ok=True)

for name, spec in manifest["templates"].items():
    body = (PROMPTS / spec["file"]).read_text(encoding="utf-8")
    if body.endswith("\n"):
        body = body[:-1]
    if body.endswith("\r"):
        body = body[:-1]
    shots_text = ""
    if "shots" in spec:
        shots = json.loads((PROMPTS / spec["shots"]).read_text(encoding="utf-8"))
        for s in shots:
            shots_text += (spec["shot_format"].replace("{{input}}", s["input"])
                           .replace("{{output}}", s["output"]))

    def fill(text):
        def sub(m):
            key = m.group(1)
            return shots_text if key == "shots" else f"<<{key}>>"
        return re.sub(r"\{\{(.*?)\}\}", sub, text)

    if spec.get("format") == "messages":
        turns = []
        for line in body.split("\n"):
            if line in ("[System]", "[User]", "[Assistant]"):
                turns.append({"role": line[1:-1].lower(), "text": ""})
            else:
                turns[-1]["text"] += line + "\n"
        for t in turns:
            t["text"] = fill(t["text"].strip("\n"))
        (OUT / f"{name}.json").write_text(
            json.dumps(turns, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    else:
        (OUT / f"{name}.txt").write_text(fill(body), encoding="utf-8")
