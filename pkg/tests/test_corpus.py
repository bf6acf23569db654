import pytest

from hirota.cli import run_corpus
from hirota.corpus import CorpusEntry, default_path, load_corpus

REQUIRED = {"wave", "dkp", "dkp_c", "boyer_finley", "exp3", "mnk", "bkp", "bkp_exp", "bkp_tan",
            "bkp_prod", "hirota", "canonical_a", "canonical_b", "canonical_c", "canonical_p",
            "wdvv", "hess1", "hess_trace"}

SMALL = """
[[entry]]
name = "wave"
kind = "evolutionary"
expr = "a + c"
integrable = {flag}
source = "test"

[[entry]]
name = "hess"
kind = "implicit"
expr = "u11*u22 - u12^2 - u33"
integrable = false
source = "test"
"""


def test_default_corpus_complete():
    corpus = load_corpus()
    assert REQUIRED <= set(corpus)
    assert default_path().name == "corpus.toml"
    assert all(e.source for e in corpus.values())


def test_entries_build_equations():
    corpus = load_corpus()
    for e in corpus.values():
        F = e.implicit()
        assert F.variables() <= {"u11", "u12", "u13", "u22", "u23", "u33"}


def test_kind_validated():
    with pytest.raises(ValueError):
        CorpusEntry("x", "weird", "a")


def test_duplicates_and_bad_L_rejected(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(SMALL.format(flag="true") * 2)
    with pytest.raises(ValueError, match="duplicate"):
        load_corpus(p)
    p.write_text('[[entry]]\nname = "x"\nkind = "implicit"\nexpr = "u11"\nL = [[1, 0], [0, 1]]\n')
    with pytest.raises(ValueError, match="3x3"):
        load_corpus(p)


def test_mislabeled_entry_is_reported(tmp_path):
    good, bad = tmp_path / "good.toml", tmp_path / "bad.toml"
    good.write_text(SMALL.format(flag="true"))
    bad.write_text(SMALL.format(flag="false"))
    assert run_corpus(1, good, points=2, triples=30)["passed"]
    rep = run_corpus(1, bad, points=2, triples=30)
    assert not rep["passed"]
    assert rep["failures"] == ["wave: verdict integrable, expected not_integrable"]
