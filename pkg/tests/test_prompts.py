"""Prompt builders against frozen golden snapshots."""
import pathlib

import pytest

from patterngcd.prompts import (
    build_extraction_prompt,
    build_match_prompt,
    build_refine_prompt,
)

DATA = pathlib.Path(__file__).parent / "data"

SAMPLES = [
    "I was asked to pay a deposit to unlock a loan.",
    "My package tracking code stopped working.",
]
PATTERNS = [
    "Loan fee fraud: upfront payment demanded to release a promised loan.",
    "Delivery scam: fake courier messages asking for a redelivery fee.",
]
REPORTS = [
    "Caller claimed my account was frozen and demanded a transfer.",
    "Text message said my card was locked and linked to a fake bank page.",
    "Email threatened account closure unless I confirmed my password.",
]


def test_match_prompt_snapshot():
    got = build_match_prompt(SAMPLES, PATTERNS)
    assert got == (DATA / "golden_match_prompt.txt").read_text()


def test_extraction_prompt_snapshot():
    got = build_extraction_prompt(REPORTS)
    assert got == (DATA / "golden_extraction_prompt.txt").read_text()


def test_refine_prompt_snapshot():
    got = build_refine_prompt(
        "Account freeze scare: the sender claims an account is blocked and "
        "demands credentials or payment.",
        true_positives=REPORTS[:2],
        false_positives=["Survey invitation offering a gift card for feedback."],
    )
    assert got == (DATA / "golden_refine_prompt.txt").read_text()


def test_match_prompt_numbering_is_one_based():
    got = build_match_prompt(["only sample"], ["only pattern"])
    assert "1: only sample" in got
    assert "1: only pattern" in got
    assert "0:" not in got


def test_match_prompt_required_sections():
    got = build_match_prompt(SAMPLES, PATTERNS)
    for heading in (
        "Task Objective:",
        "Category Set:",
        "Text Samples to be Classified:",
        "Classification Rules:",
        "Output Format Requirements:",
        '"New Category"',
        '"Assigned Category Index"',
    ):
        assert heading in got


def test_extraction_prompt_required_sections():
    got = build_extraction_prompt(REPORTS)
    for heading in (
        "Task Objective:",
        "<FORMAT>",
        "Method Analysis:",
        "Type Statistics:",
        "Summary of the Main Pattern:",
        "Report Information:",
        '"Report Number"',
    ):
        assert heading in got


def test_refine_prompt_empty_true_positives_placeholder():
    got = build_refine_prompt("p", [], ["fp text"])
    assert "True Positive Reports:\n(none)" in got


def test_builder_validation():
    with pytest.raises(ValueError):
        build_match_prompt([], PATTERNS)
    with pytest.raises(ValueError):
        build_match_prompt(SAMPLES, [])
    with pytest.raises(ValueError):
        build_extraction_prompt([])
    with pytest.raises(ValueError):
        build_refine_prompt("p", ["tp"], [])
