import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from erasure_retrieval.corpus import ZipfVocabulary, generate_corpus

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_vocab():
    return ZipfVocabulary.create(500, 1.0)


@pytest.fixture(scope="session")
def small_corpus(small_vocab):
    return generate_corpus(small_vocab, 6, 2000, seed=(123,))


def random_psd(rng, m, k=None):
    """Random covariance of rank min(m, k) built as A A^T."""
    A = rng.standard_normal((m, k or m + 2))
    return A @ A.T


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split("criterion")[1]):
            terminalreporter.write_line(line)
