"""Prompt templates for the three oracle interactions.

Builders return a single user-message string.  Samples and categories are
numbered from 1 inside the prompt; callers keep the mapping back to sample
ids.  The wording is frozen by golden-file tests, so edits here must update
the snapshots deliberately.
"""
from __future__ import annotations

MATCH_HEADER = """Task Objective:
1. Analyze the user-provided text samples.
2. Match each text sample to a category from the category set below.
3. Strictly follow the required output format.
"""

MATCH_RULES = """Classification Rules:
1. Compare each text sample against every category. A sample may only be \
assigned to a category when it fully matches the category description and \
satisfies all of its core required features.
2. If a sample matches several categories, choose the one with the highest \
degree of matching.
3. If any core required feature is missing, classify the sample as a "New Category".
"""

MATCH_OUTPUT = """Output Format Requirements:

Please strictly return the result in JSON format (do not use markdown \
formatting), including the following fields:
{
    "results": [
        {
            "Index": Original text sample index,
            "Assigned Category Index": Category index or "New Category",
            "Matching Justification": An explanation of which core required \
features were matched. The sample must satisfy all core required features \
of the assigned category.
        },
        ...
    ]
}
"""

EXTRACT_HEADER = "Task Objective: Analyze the reports below and identify the major recurring pattern.\n"

EXTRACT_FORMAT = """Output Requirements (do not use markdown format):

<FORMAT>
1. Method Analysis:
   Break each report into its key elements: who is acting, the key phrases \
used, and the distinguishing techniques involved.

2. Type Statistics:
   [Give the number of reports per identified type and name the type with \
the highest number of reports]

3. Summary of the Main Pattern:
   [Type Name]: [Description of the typical flow for this type]

4. List of report numbers belonging to the main pattern identified in steps 2 and 3:
   [
   {
   "Report Number": number,
   "Basis": "..."
   },
   ... // one element per report that belongs to the main pattern
   ]
</FORMAT>
"""

REFINE_HEADER = """Task Objective:
1. Review the current category pattern together with labeled reports.
2. Revise the pattern so that it still matches every true positive report \
but no longer matches any false positive report.
3. Strictly follow the required output format.
"""

REFINE_OUTPUT = """Output Format Requirements:

Please strictly return the result in JSON format (do not use markdown \
formatting), including the following fields:
{
    "Revised Pattern": "the revised pattern description"
}
"""


def _numbered(items: list[str]) -> str:
    return "\n".join(f"{i + 1}: {text}" for i, text in enumerate(items))


def build_match_prompt(sample_texts: list[str], pattern_texts: list[str]) -> str:
    """Prompt asking the oracle to match each sample to a known pattern."""
    if not sample_texts:
        raise ValueError("no samples to match")
    if not pattern_texts:
        raise ValueError("no patterns to match against")
    parts = [
        MATCH_HEADER,
        "Category Set:\n" + _numbered(pattern_texts) + "\n",
        "Text Samples to be Classified:\n" + _numbered(sample_texts) + "\n",
        MATCH_RULES,
        MATCH_OUTPUT,
    ]
    return "\n".join(parts)


def build_extraction_prompt(report_texts: list[str]) -> str:
    """Prompt asking the oracle to mine the dominant pattern from reports."""
    if not report_texts:
        raise ValueError("no reports to mine")
    parts = [
        EXTRACT_HEADER,
        EXTRACT_FORMAT,
        "Report Information:\n" + _numbered(report_texts) + "\n",
    ]
    return "\n".join(parts)


def build_refine_prompt(pattern_text: str, true_positives: list[str], false_positives: list[str]) -> str:
    """Prompt asking the oracle to revise a pattern against labeled evidence."""
    if not false_positives:
        raise ValueError("refinement needs at least one false positive")
    parts = [
        REFINE_HEADER,
        "Current Pattern:\n" + pattern_text + "\n",
        "True Positive Reports:\n" + (_numbered(true_positives) if true_positives else "(none)") + "\n",
        "False Positive Reports:\n" + _numbered(false_positives) + "\n",
        REFINE_OUTPUT,
    ]
    return "\n".join(parts)


REPAIR_SUFFIX = "Return only valid JSON matching the required output format, with no extra text."
