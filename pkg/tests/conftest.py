import numpy as np
import pytest

from asr_inconsistency import Vocabulary, PosteriorMatrix, parse_arpa


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {outcome}", flush=True)


@pytest.fixture(scope="session")
def abc_vocab() -> Vocabulary:
    return Vocabulary(symbols=("<blank>", "|", "a", "b", "c"),
                      blank_index=0, delimiter_index=1)


def random_log_matrix(rng: np.random.Generator, t: int, v: int) -> np.ndarray:
    """Row-normalized natural-log probabilities from a flat Dirichlet."""
    probs = rng.dirichlet(np.ones(v), size=t)
    return np.log(probs)


def matrix_from_probs(utterance_id: str, probs) -> PosteriorMatrix:
    return PosteriorMatrix.from_array(utterance_id, np.log(np.asarray(probs, float)))


def peaked_rows(hot_indices, v: int, hot: float = 0.99) -> np.ndarray:
    rows = []
    for idx in hot_indices:
        row = np.full(v, (1.0 - hot) / (v - 1))
        row[idx] = hot
        rows.append(row)
    return np.asarray(rows)


# six entry lines: three unigrams (one with a backoff) and two bigrams;
# P(b|a)=0.5, P(a|a)=0.4, backoff(a)=-0.3 so that sum_w P(w|a) = 1 exactly
BIGRAM_ARPA = """\
\\data\\
ngram 1=3
ngram 2=2

\\1-grams:
-0.5\ta\t-0.3
-0.6020599913279624\tb
-0.7\tc

\\2-grams:
-0.3010299956639812\ta b
-0.3979400086720376\ta a

\\end\\
"""


@pytest.fixture(scope="session")
def bigram_model():
    return parse_arpa(BIGRAM_ARPA)


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory):
    from asr_inconsistency.synthetic import generate_corpus

    root = tmp_path_factory.mktemp("corpus")
    return generate_corpus(root, n_speakers=12, utterances_per_speaker=6,
                           words_per_utterance=5, seed=20240, write_audio=True)
