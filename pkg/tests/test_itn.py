import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpusforge.itn import DEFAULT_ITN_RULES, ItnRules, inverse_normalize
from corpusforge.textnorm import DEFAULT_SPECIAL_TERMS, NormRules, RuleError, normalize


def test_known_phrases_in_context():
    assert inverse_normalize("i need my w two form") == "i need my w2 form"
    assert inverse_normalize("covid nineteen coverage") == "covid-19 coverage"
    assert inverse_normalize("hello world") == "hello world"


def test_round_trip_over_whole_dictionary():
    for written in DEFAULT_SPECIAL_TERMS:
        assert inverse_normalize(normalize(written)) == written, written


def test_round_trip_in_sentence_context():
    raw = "does my 401k cover ad&d and covid-19 under the w2"
    assert inverse_normalize(normalize(raw)) == raw


def test_word_boundary_safety():
    # words merely containing a phrase's words as substrings are untouched
    assert inverse_normalize("network two") == "network two"
    assert inverse_normalize("now two oh") == "now two oh"
    assert inverse_normalize("sw two") == "sw two"


def test_longest_match_wins():
    rules = ItnRules({("a", "b"): "X", ("a", "b", "c"): "Y"})
    assert inverse_normalize("a b c", rules) == "Y"
    assert inverse_normalize("a b d", rules) == "X d"
    assert inverse_normalize("a b a b c", rules) == "X Y"


def test_adjacent_phrases():
    assert inverse_normalize("w two w four i nine") == "w2 w4 i9"


def test_empty_and_identity():
    assert inverse_normalize("") == ""
    assert inverse_normalize("plain words only") == "plain words only"


def test_ambiguous_inverse_rejected():
    rules = NormRules(special_terms={"w2": "w two", "w-2": "w two"})
    with pytest.raises(RuleError):
        ItnRules.from_norm_rules(rules)


# words guaranteed not to begin any default spoken phrase
_FILLER = st.sampled_from(
    "the and benefits plan form my coverage question about deductible "
    "enrollment please help need change want".split())
_PHRASE = st.sampled_from(sorted(DEFAULT_SPECIAL_TERMS))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(_FILLER, _PHRASE), max_size=12))
def test_mixed_sentences_invert_exactly(pieces):
    spoken = " ".join(
        DEFAULT_SPECIAL_TERMS.get(p, p) for p in pieces)
    expected = " ".join(pieces)
    assert inverse_normalize(spoken) == expected


@settings(max_examples=200, deadline=None)
@given(st.lists(_FILLER, max_size=12))
def test_filler_only_sentences_unchanged(words):
    text = " ".join(words)
    assert inverse_normalize(text) == text
