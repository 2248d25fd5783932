import pytest

from asr_inconsistency import Transcript, TranscriptSource, normalize_text
from asr_inconsistency.errors import TranscriptInvariantError


class TestNormalizeText:
    def test_lowercase_and_punctuation(self):
        assert normalize_text("De Kat, zit.") == ["de", "kat", "zit"]

    def test_stray_period_dropped(self):
        assert normalize_text("zij hadden .") == ["zij", "hadden"]

    def test_intra_word_apostrophe_and_hyphen_kept(self):
        assert normalize_text("it's o-k") == ["it's", "o-k"]

    def test_edge_apostrophes_dropped(self):
        assert normalize_text("'kat' -zit-") == ["kat", "zit"]

    def test_delimiter_bar_acts_as_whitespace(self):
        assert normalize_text("de|kat|zit") == ["de", "kat", "zit"]

    def test_whitespace_collapse(self):
        assert normalize_text("  de \t kat\n zit ") == ["de", "kat", "zit"]

    def test_empty_input(self):
        assert normalize_text("") == []
        assert normalize_text(" ... ") == []

    def test_unicode_nfc_applies_before_lowercasing(self):
        # decomposed e + combining acute must equal the precomposed form
        assert normalize_text("café") == normalize_text("café")

    def test_typographic_apostrophe(self):
        assert normalize_text("it’s") == ["it’s"]


class TestTranscript:
    def test_from_raw_normalizes(self):
        t = Transcript.from_raw("De Kat!", TranscriptSource.GREEDY)
        assert t.words == ("de", "kat")
        assert t.raw_text == "De Kat!"
        assert t.word_count == 2
        assert t.text() == "de kat"

    def test_source_tags(self):
        for source in TranscriptSource:
            assert Transcript.from_raw("a", source).source is source

    def test_mismatched_words_rejected(self):
        with pytest.raises(TranscriptInvariantError):
            Transcript(words=("kat",), raw_text="hond", source=TranscriptSource.GREEDY)

    def test_delimiter_inside_word_rejected(self):
        with pytest.raises(TranscriptInvariantError):
            Transcript(words=("a|b",), raw_text="a|b", source=TranscriptSource.GREEDY)

    def test_empty_transcript_allowed(self):
        t = Transcript.from_raw("", TranscriptSource.GREEDY)
        assert t.words == ()
