import math

import pytest

from mcrx import RawDocument, build_corpus

LN2 = math.log(2.0)
LN3 = math.log(3.0)


def make_kb(texts: dict[str, str]):
    kb, skipped = build_corpus([RawDocument(doc_id, body) for doc_id, body in texts.items()])
    assert not skipped
    return kb


@pytest.fixture
def c2():
    """Two documents sharing one word: d1="a b", d2="b c"."""
    return make_kb({"d1": "a b", "d2": "b c"})


@pytest.fixture
def c3():
    """Asymmetry witness: d1="a", d2="a b"."""
    return make_kb({"d1": "a", "d2": "a b"})
