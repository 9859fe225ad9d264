"""Versioned text assets: task prompt grids, rewrite instructions, extractor rules.

Prompt wording is part of the method (results are prompt-sensitive), so every
asset carries a version string that is recorded alongside cached outputs.
Changing any wording requires bumping the corresponding version.
"""

REWRITE_PROMPT_VERSION = "rewrite-v1"

PARAPHRASE_INSTRUCTION = (
    "Rewrite the following text so it keeps exactly the same meaning but uses "
    "different wording."
)

ADVERSARIAL_INSTRUCTION = (
    "Rewrite the following text changing its meaning as much as possible while "
    "making as few word edits as possible."
)


# Question phrasings per factual task. "default" is the plain phrasing used
# when a run does not select one explicitly; "enumerated" interpolates the
# full label list via {options}.
TASK_PROMPTS: dict[str, dict[str, str]] = {
    "genre": {
        "default": "What genre does this piece of music fall under?",
        "casual": "What is the genre of this song",
        "inferential": "What can you infer about the genre of the music",
        "enumerated": "Among {options}, what is the genre of this song?",
    },
    "instrument": {
        "default": "Which instruments are used in this piece of music?",
        "formal": "Which instruments constitute the instrumentation of this piece?",
        "casual": "What instruments are playing in this song?",
        "enumerated": "Among {options}, which instruments are used in this piece of music?",
    },
    "composer": {
        "default": "Which classical composer's style does this piece resemble the most?",
        "formal": "Which classical composer's compositional style does this piece most closely resemble?",
        "casual": "Which classical composer's work does this sound like?",
        "enumerated": "Among {options}, whose style does this piece of music sound like?",
    },
}

BINARY_CHOICE_PROMPTS: dict[str, str] = {
    "genre": "Between {first} and {second}, what is a better description of the genre of this piece?",
    "composer": "Between {first} and {second}, whose style does this piece resemble the most?",
    "instrument": "Between {first} and {second}, which is used in this piece of music?",
}

TRUE_FALSE_PROMPT = "Is {label} used in this song?"


EXTRACTION_TEMPLATE_VERSION = "extract-v1"

EXTRACTION_RULES = """\
1. Exact mention requirement: return only terms that explicitly appear in the answer.
2. No guessing: exclude implicit inferences and contextual associations (for example, do not return "jazz" just because the answer mentions a swing rhythm).
3. Comparatives: for statements of the form "X more than Y", keep only the preferred entity X.
4. Deduplication and ordering: remove duplicate mentions; the order of first appearance is preserved.
5. Output format: return a comma-separated list, e.g. "rock, jazz, classical".
6. Empty case: if no relevant term is mentioned, return an empty string.
7. Canonical form: normalize every term to its simplest widely recognized form (e.g. "J.S. Bach" -> "Bach", "Acoustic Grand Piano" -> "piano").
8. No stylistic inclusion: ignore descriptions of mood or affect that lack an explicit term (e.g. "a jazz-like feeling" is not "jazz")."""

EXTRACTION_SYSTEM_TEMPLATE = """\
You extract keywords from a music model's answer for the task: {task}.
Follow these rules exactly:
{rules}
{vocabulary_hint}"""

EXTRACTION_TEMPLATE = EXTRACTION_SYSTEM_TEMPLATE + """Answer to process:
{response}"""


def render_extraction_system(task: str, vocabulary_hint=None) -> str:
    """The instruction half of the prompt: rules, task, optional vocabulary."""
    hint = ""
    if vocabulary_hint:
        hint = "Relevant vocabulary: " + ", ".join(vocabulary_hint) + "\n"
    return EXTRACTION_SYSTEM_TEMPLATE.format(task=task, rules=EXTRACTION_RULES, vocabulary_hint=hint)


def render_extraction_prompt(task: str, response: str, vocabulary_hint=None) -> str:
    """Full prompt (instructions plus the response), logged and cached."""
    hint = ""
    if vocabulary_hint:
        hint = "Relevant vocabulary: " + ", ".join(vocabulary_hint) + "\n"
    return EXTRACTION_TEMPLATE.format(
        task=task, rules=EXTRACTION_RULES, vocabulary_hint=hint, response=response
    )
