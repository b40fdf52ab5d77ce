"""Profile-field extraction from conversational text.

The patterns live in ``data/extraction_rules.json`` so tests and the UI
apply exactly the rules the scripted planner applies.  Matching is
case-insensitive; for single-value fields the first matching pattern wins
within one message, and a later message overwrites an earlier value.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def load_rules() -> dict:
    text = resources.files("edgeprov.data").joinpath("extraction_rules.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def _compiled() -> dict:
    rules = load_rules()
    return {
        "fields": [
            (r["field"], r["type"], re.compile(r["pattern"], re.IGNORECASE))
            for r in rules["field_patterns"]
        ],
        "multi": [
            (r["field"], re.compile(r["pattern"], re.IGNORECASE))
            for r in rules["multi_patterns"]
        ],
        "categories": {
            cat: [kw.lower() for kw in kws]
            for cat, kws in rules["category_keywords"].items()
        },
        "device_types": {
            dev: [kw.lower() for kw in kws]
            for dev, kws in rules["device_type_keywords"].items()
        },
    }


def _coerce(value: str, kind: str):
    if kind == "integer":
        return int(value)
    if kind == "number":
        return float(value)
    return value.strip()


def extract_fields(text: str) -> dict:
    """Extract every profile field present in a message."""
    compiled = _compiled()
    lowered = text.lower()
    out: dict = {}
    for category, keywords in compiled["categories"].items():
        if any(kw in lowered for kw in keywords):
            out["application_category"] = category
            break
    for device, keywords in compiled["device_types"].items():
        if any(kw in lowered for kw in keywords):
            out["device_type"] = device
            break
    seen = set()
    for field, kind, pattern in compiled["fields"]:
        if field in seen:
            continue
        match = pattern.search(text)
        if match:
            out[field] = _coerce(match.group(1), kind)
            seen.add(field)
    for field, pattern in compiled["multi"]:
        values = sorted(set(m.group(1).lower() for m in pattern.finditer(text)))
        if values:
            out[field] = values
    return out
