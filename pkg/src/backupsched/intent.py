"""Rule-based extraction of placement parameters from short English requests.

The grammar is a fixed set of clause patterns, e.g.::

    Backup asset VM16as_v1 four times per week with minimal overlap,
    and no more than twice on any day.

Each clause fills one :class:`~backupsched.schedule.IntentParams` field.
Text that matches no clause and is not filler is reported back as a
warning instead of being dropped.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

from backupsched.schedule import DAY_HOURS, WEEK_HOURS, IntentParams


class IntentError(ValueError):
    """The text holds no usable clause, or its clauses contradict each other."""


ALPHA_TABLES = {
    "default": {
        "minimal": 0.0,
        "minimum": 0.0,
        "no": 0.0,
        "no-other": 0.0,
        "lull": 0.0,
        "low": 0.25,
        "moderate": 0.5,
        "high": 0.75,
        "maximal": 1.0,
        "maximum": 1.0,
    },
    # values read off the published worked examples
    "paper": {
        "minimal": 0.0,
        "minimum": 0.0,
        "no": 0.0,
        "lull": 0.0,
        "no-other": 0.2,
        "low": 0.25,
        "moderate": 0.8,
        "high": 0.75,
        "maximal": 1.0,
        "maximum": 1.0,
    },
}

_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}
_ADVERBS = {"once": 1, "twice": 2, "thrice": 3}
_NUM = r"(\d+(?:\.\d+)?|" + "|".join(_WORDS) + r")"
_UNIT = r"(hours?|hrs?|h|days?)"

_FILLER = set(
    """a an the i we me us you need want wants would like to please try schedule
    schedules scheduled scheduling backup backups back up asset assets job jobs with
    other my our your existing them it they that are is be ensure make sure and but
    for of on in at by incremental full normal new client clients server also so
    should can could must while do run runs""".split()
)


def _number(tok: str) -> float:
    tok = tok.lower()
    if tok in _WORDS:
        return _WORDS[tok]
    if tok in _ADVERBS:
        return _ADVERBS[tok]
    return float(tok)


def _hours(value: str, unit: str) -> float:
    n = _number(value)
    return n * DAY_HOURS if unit.lower().startswith("day") else n


@dataclass
class IntentPhrase:
    raw: str
    recognized_clauses: list = field(default_factory=list)  # (kind, value, (start, end))
    unrecognized: list = field(default_factory=list)


# (kind, pattern, converter); earlier rules claim text first
_RULES = [
    (
        "daily_cap",
        r"\b(?:no more than|at most|not more than)\s+(" + _NUM[1:-1] + r"|once|twice|thrice)"
        r"(?:\s+times?)?\s+(?:on|per|in|a)\s+(?:any|each|a|one|every)?\s*day\b",
        lambda m: int(_number(m.group(1))),
    ),
    (
        "epsilon",
        r"\bnot more (?:frequently|often) than once (?:every|per|each)\s+" + _NUM + r"\s*" + _UNIT + r"\b",
        lambda m: _hours(m.group(1), m.group(2)),
    ),
    (
        "epsilon",
        r"\b(?:(?:spread|spaced)\s+(?:apart\s+)?)?by at least\s+" + _NUM + r"\s*" + _UNIT + r"\b",
        lambda m: _hours(m.group(1), m.group(2)),
    ),
    (
        "epsilon",
        r"\bat least\s+" + _NUM + r"\s*" + _UNIT + r"\s+apart\b",
        lambda m: _hours(m.group(1), m.group(2)),
    ),
    (
        "epsilon",
        r"\b(?:min(?:imum)?\s+)?spacing\s+(?:of\s+)?" + _NUM + r"\s*" + _UNIT + r"\b",
        lambda m: _hours(m.group(1), m.group(2)),
    ),
    (
        "k",
        r"\b" + _NUM + r"\s+times\b",
        lambda m: _number(m.group(1)),
    ),
    (
        "k",
        r"\b(once|twice|thrice)\b",
        lambda m: _number(m.group(1)),
    ),
    (
        "period_hours",
        r"\b(?:(?:per|a|each|every)\s+week|weekly)\b",
        lambda m: WEEK_HOURS,
    ),
    (
        "period_hours",
        r"\b(?:(?:per|a|each|every)\s+day|daily)\b",
        lambda m: DAY_HOURS,
    ),
    (
        "alpha",
        r"\b(minimal|minimum|no|low|moderate|high|maximal|maximum)\s+overlap\b",
        lambda m: m.group(1).lower(),
    ),
    (
        "alpha",
        r"\bwhen no other\s+(?:\w+\s+){0,3}?(?:is|are)\s+(?:happening|running)\b",
        lambda m: "no-other",
    ),
    (
        "alpha",
        r"\b(?:during|in)\s+(?:the\s+)?lull\s+periods?\b",
        lambda m: "lull",
    ),
    (
        "asset",
        r"\basset\s+([A-Za-z][\w.\-]*)",
        lambda m: m.group(1),
    ),
]
_COMPILED = [(kind, re.compile(p, re.IGNORECASE), conv) for kind, p, conv in _RULES]
_IDENT = re.compile(r"\b[A-Za-z][A-Za-z0-9.\-]*(?:[0-9_][A-Za-z0-9.\-]*)+\b|\b[A-Za-z]\w*_\w*\b")
_SPLIT = re.compile(r"[,.;:!?]|\b(?:and|but|or)\b", re.IGNORECASE)


def _free(taken: list, span: tuple) -> bool:
    return all(span[1] <= a or span[0] >= b for a, b in taken)


def analyze_intent(text: str) -> IntentPhrase:
    """Find every clause in ``text``; leftover content words go to ``unrecognized``."""
    phrase = IntentPhrase(text)
    taken: list = []
    for kind, rx, conv in _COMPILED:
        for m in rx.finditer(text):
            if _free(taken, m.span()):
                taken.append(m.span())
                phrase.recognized_clauses.append((kind, conv(m), m.span()))
    if not any(kind == "asset" for kind, _, _ in phrase.recognized_clauses):
        for m in _IDENT.finditer(text):
            if _free(taken, m.span()):
                taken.append(m.span())
                phrase.recognized_clauses.append(("asset", m.group(0), m.span()))
                break
    phrase.recognized_clauses.sort(key=lambda c: c[2])

    chars = list(text)
    for a, b in taken:
        chars[a:b] = " " * (b - a)
    for frag in _SPLIT.split("".join(chars)):
        words = frag.split()
        content = [i for i, w in enumerate(words) if w.strip("'\"()").lower() not in _FILLER]
        if content:
            phrase.unrecognized.append(" ".join(words[content[0]:content[-1] + 1]))
    return phrase


def parse_intent(
    text: str,
    defaults: IntentParams | None = None,
    alpha_table: str | dict = "default",
) -> tuple[IntentParams, list[str]]:
    """Map an intent string to :class:`IntentParams` plus a list of warnings."""
    if not text or not text.strip():
        raise IntentError("empty intent")
    defaults = defaults or IntentParams()
    table = ALPHA_TABLES[alpha_table] if isinstance(alpha_table, str) else dict(alpha_table)
    phrase = analyze_intent(text)
    clauses = [c for c in phrase.recognized_clauses if c[0] != "asset"]
    if not clauses:
        raise IntentError(f"no recognizable scheduling clause in {text!r}")

    found: dict = {}
    for kind, value, span in phrase.recognized_clauses:
        if kind == "alpha":
            if value not in table:
                raise IntentError(f"alpha table has no entry for {value!r}")
            value = table[value]
        if kind in found and found[kind][0] != value:
            raise IntentError(
                f"contradictory {kind} clauses: {text[slice(*found[kind][1])]!r} "
                f"vs {text[slice(*span)]!r}"
            )
        found[kind] = (value, span)

    warnings = [f"unrecognized clause: {frag!r}" for frag in phrase.unrecognized]
    updates = {kind: value for kind, (value, _) in found.items()}
    if "k" in updates:
        k = updates["k"]
        if k != int(k):
            raise IntentError(f"window count must be whole, got {k}")
        updates["k"] = int(k)
    else:
        warnings.append(f"no window count given; using k={defaults.k}")
    if "daily_cap" in updates:
        cap = updates["daily_cap"]
        updates["bucket_hours"] = DAY_HOURS
        if "epsilon" not in updates and cap >= 1:
            updates["epsilon"] = max(defaults.epsilon, DAY_HOURS / cap)
            warnings.append(
                f"per-day cap of {cap} also read as minimum spacing "
                f"{updates['epsilon']:g} h; pass an explicit spacing to override"
            )

    params = dataclasses.replace(defaults, **updates)
    problems = params.range_problems()
    if problems:
        raise IntentError("; ".join(problems))
    return params, warnings


def render_intent(params: IntentParams, alpha_table: str | dict = "default") -> str:
    """Canonical sentence that :func:`parse_intent` maps back to ``params``.

    Only the fields the grammar covers are rendered (``omega``, ``delta`` and
    the concurrency limit come from the defaults on the way back).
    """
    table = ALPHA_TABLES[alpha_table] if isinstance(alpha_table, str) else dict(alpha_table)
    words = ["Backup"]
    if params.asset:
        words += ["asset", params.asset]
    words.append(f"{params.k} times")
    if params.period_hours == WEEK_HOURS:
        words.append("per week")
    elif params.period_hours == DAY_HOURS:
        words.append("per day")
    elif params.period_hours is not None:
        raise ValueError(f"period {params.period_hours} h has no phrase in the grammar")
    adjective = next((key for key, val in table.items() if val == params.alpha), None)
    if adjective is None:
        raise ValueError(f"alpha {params.alpha} has no phrase in the alpha table")
    if adjective == "no-other":
        words.append("when no other backups are happening")
    elif adjective == "lull":
        words.append("during lull periods")
    else:
        words.append(f"with {adjective} overlap")
    text = " ".join(words)
    if params.epsilon > 0:
        text += f", at least {params.epsilon!r} hours apart"
    if params.daily_cap is not None:
        text += f", and no more than {params.daily_cap} times on any day"
    return text + "."
