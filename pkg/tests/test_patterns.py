"""Pattern records and the one-active-per-owner store."""
import pytest

from patterngcd.patterns import OracleVerdict, Pattern, PatternStore


def test_store_one_pattern_per_owner():
    store = PatternStore()
    p = store.add(3, "refund requests")
    assert p.pattern_id == 0
    assert len(store) == 1
    assert 3 in store
    assert store.get(3) is p
    with pytest.raises(ValueError, match="class 3 already owns"):
        store.add(3, "something else")


def test_store_ids_increment_in_add_order():
    store = PatternStore()
    first = store.add(5, "a")
    second = store.add(1, "b")
    assert (first.pattern_id, second.pattern_id) == (0, 1)
    # ordered() follows pattern id, not owner id
    assert [p.owner for p in store.ordered()] == [5, 1]
    assert store.by_pattern_id(1).owner == 1
    with pytest.raises(KeyError):
        store.by_pattern_id(9)


def test_revise_keeps_history():
    store = PatternStore()
    store.add(0, "old text")
    p = store.revise(0, "new text")
    assert p.text == "new text"
    assert p.origin == "refined"
    assert p.revisions == ["old text"]
    # unchanged text is a no-op
    same = store.revise(0, "new text")
    assert same.revisions == ["old text"]
    assert same.origin == "refined"


def test_json_round_trip():
    store = PatternStore()
    store.add(2, "wire transfer demands")
    store.revise(2, "urgent wire transfer demands")
    store.add(0, "account lockouts", origin="extracted")
    back = PatternStore.from_json(store.to_json())
    assert len(back) == 2
    got = back.get(2)
    assert got.text == "urgent wire transfer demands"
    assert got.revisions == ["wire transfer demands"]
    assert got.origin == "refined"
    # ids continue past the restored maximum
    assert back.add(7, "x").pattern_id == 2


def test_from_json_rejects_duplicate_owner():
    items = [
        {"pattern_id": 0, "owner": 1, "text": "a"},
        {"pattern_id": 1, "owner": 1, "text": "b"},
    ]
    with pytest.raises(ValueError, match="already owns"):
        PatternStore.from_json(items)


def test_verdict_new_category_flag():
    assert OracleVerdict("s1", None).is_new_category
    assert not OracleVerdict("s1", 0).is_new_category


def test_pattern_json_defaults():
    p = Pattern.from_json({"pattern_id": 4, "owner": 2, "text": "t"})
    assert p.origin == "extracted"
    assert p.revisions == []
    assert p.to_json()["revisions"] == []
