import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harvest.dedup import (COUNTERS, DedupState, StateError, dedup_documents,
                           dedup_windows, doc_hash, load_state, save_state, state_from_bytes,
                           state_to_bytes, window_hashes)
from harvest.document import Document


def doc(lines, url="https://a.is/"):
    return Document(f"d|20200101000000|{url}", url, "20200101000000", list(lines))


def run_windows(docs, state=None):
    state = state or DedupState()
    out = [dedup_windows(d, state) for d in docs]
    return [o.lines if o else None for o in out], state


# -- hashing ------------------------------------------------------------------

def test_doc_hash_ignores_url():
    assert doc_hash(doc(["a", "b"], "https://x.is/")) == doc_hash(doc(["a", "b"], "https://y.is/"))


def test_doc_hash_sensitive_to_content():
    assert doc_hash(doc(["abc"])) != doc_hash(doc(["abd"]))
    assert doc_hash(doc(["ab", "c"])) != doc_hash(doc(["a", "bc"]))
    assert len(doc_hash(doc(["x"]))) == 16


def test_doc_hash_normalizes_whitespace():
    assert doc_hash(doc(["a  b"])) == doc_hash(doc(["a b"]))


def test_window_hashes_count():
    assert [i for i, _ in window_hashes(["a", "b", "c", "d"])] == [0, 1]
    assert window_hashes(["a", "b"]) == []
    assert window_hashes([]) == []


def test_window_separator_prevents_boundary_ambiguity():
    (_, a), = window_hashes(["ab", "c", "d"])
    (_, b), = window_hashes(["a", "bc", "d"])
    assert a != b


def test_permuted_lines_change_window_multiset():
    rng = random.Random(1)
    for _ in range(200):
        lines = [f"line {i}" for i in range(rng.randint(3, 8))]
        perm = lines[:]
        while perm == lines:
            rng.shuffle(perm)
        brute = lambda ls: sorted(tuple(ls[i:i + 3]) for i in range(len(ls) - 2))
        ours = lambda ls: sorted(h for _, h in window_hashes(ls))
        assert (ours(lines) == ours(perm)) == (brute(lines) == brute(perm))


def test_no_collisions_on_10k_docs():
    rng = random.Random(2)
    contents = set()
    while len(contents) < 10_000:
        lines = ("".join(rng.choices("abcdefgh ", k=rng.randint(1, 12))) for _ in range(4))
        # distinct after whitespace normalization, which is part of the hash input
        contents.add(tuple(" ".join(ln.split()) or "z" for ln in lines)[:rng.randint(1, 4)])
    hashes = {doc_hash(doc(c)) for c in contents}
    assert len(hashes) == len(contents)


# -- document level ---------------------------------------------------------------

def test_dedup_documents_repeat():
    a, b = doc(["alpha"]), doc(["beta"])
    state = DedupState()
    assert [d.lines for d in dedup_documents([a, b, doc(["alpha"], "https://z.is/")], state)] == \
        [["alpha"], ["beta"]]
    assert state.counters["docs_dropped"] == 1


def test_corpus_twice_same_retained_set():
    rng = random.Random(3)
    corpus = [doc([rng.choice("abcde") for _ in range(2)]) for _ in range(40)]
    once = [d.lines for d in dedup_documents(corpus, DedupState())]
    twice = [d.lines for d in dedup_documents(corpus + corpus, DedupState())]
    assert once == twice


def test_five_docs_two_duplicates():
    docs = [doc(x) for x in (["a"], ["b"], ["a"], ["c"], ["b"])]
    state = DedupState()
    kept = list(dedup_documents(docs, state))
    assert len(kept) == 3
    assert (state.counters["docs_seen"], state.counters["docs_dropped"]) == (5, 2)


# -- window level -----------------------------------------------------------------

FOOTER = ["Fréttavefurinn ehf.", "Sími 555 1234", "Allur réttur áskilinn"]


def test_footer_kept_first_time_only():
    x = doc(["Frétt eitt"] + FOOTER)
    y = doc(["Frétt tvö", "Önnur lína"] + FOOTER)
    (ox, oy), _ = run_windows([x, y])
    assert ox == x.lines
    assert oy == ["Frétt tvö", "Önnur lína"]


def test_identical_doc_fully_discarded_second_time():
    d = doc(["a", "b", "c", "d"])
    (first, second), state = run_windows([d, d])
    assert first == ["a", "b", "c", "d"] and second is None
    assert state.counters["window_docs_dropped"] == 1


def test_short_docs_pass_through():
    (a, b), state = run_windows([doc(["a", "b"]), doc(["a", "b"])])
    assert a == b == ["a", "b"]
    assert not state.window_hashes


def test_repeated_window_not_reinserted():
    state = DedupState()
    dedup_windows(doc(["a", "b", "c"]), state)
    before = set(state.window_hashes)
    dedup_windows(doc(["a", "b", "c", "x"]), state)
    # "b","c","x" is new and inserted; the repeated window adds nothing
    assert len(state.window_hashes) == len(before) + 1


def _oracle(docs):
    """Quadratic re-scan: every earlier window is kept in a plain list."""
    seen = []
    masks = []
    for d in docs:
        lines = [" ".join(ln.split()) for ln in d.lines]
        drop = [False] * len(lines)
        for i in range(len(lines) - 2):
            w = (lines[i], lines[i + 1], lines[i + 2])
            if any(w == s for s in seen):
                drop[i] = drop[i + 1] = drop[i + 2] = True
            else:
                seen.append(w)
        masks.append(drop)
    return masks


def random_corpus(rng, n_docs, vocab):
    return [doc([rng.choice(vocab) for _ in range(rng.randint(0, 9))] or ["solo"])
            for _ in range(n_docs)]


def _check_against_oracle(docs):
    ours, state = run_windows(docs)
    masks = _oracle(docs)
    for d, got, mask in zip(docs, ours, masks):
        expect = [ln for ln, gone in zip(d.lines, mask) if not gone]
        assert got == (expect or None)
    assert state.conserved()
    # global window uniqueness over windows whose three lines all survive
    survivors = []
    for d, mask in zip(docs, masks):
        for i in range(len(d.lines) - 2):
            if not any(mask[i:i + 3]):
                survivors.append(tuple(d.lines[i:i + 3]))
    assert len(survivors) == len(set(survivors))


@pytest.mark.parametrize("seed", range(100))
def test_windows_match_brute_force(seed):
    rng = random.Random(seed)
    vocab = [f"lína {i}" for i in range(rng.randint(3, 12))]
    _check_against_oracle(random_corpus(rng, 200, vocab))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=8),
                max_size=15))
def test_windows_match_brute_force_hypothesis(corpus):
    _check_against_oracle([doc(lines) for lines in corpus])


def test_pipeline_order_counters_conserve():
    rng = random.Random(9)
    vocab = ["x", "y", "z", "w"]
    docs = random_corpus(rng, 300, vocab)
    state = DedupState()
    for d in dedup_documents(docs, state):
        dedup_windows(d, state)
    c = state.counters
    assert state.conserved()
    assert c["window_docs_seen"] == c["docs_kept"]
    assert c["docs_seen"] == 300


def test_determinism():
    rng = random.Random(4)
    docs = random_corpus(rng, 200, ["p", "q", "r", "s", "t"])
    a, sa = run_windows(docs)
    b, sb = run_windows(docs)
    assert a == b and state_to_bytes(sa) == state_to_bytes(sb)


# -- persistence ----------------------------------------------------------------

def test_empty_state_round_trip(tmp_path):
    path = str(tmp_path / "s.state")
    save_state(DedupState(), path)
    loaded = load_state(path)
    assert loaded.doc_hashes == set() and loaded.window_hashes == set()
    assert loaded.counters == dict.fromkeys(COUNTERS, 0)
    assert not os.path.exists(path + ".tmp")


def test_state_round_trip_with_meta(tmp_path):
    state = DedupState()
    for d in dedup_documents([doc(["a", "b", "c"]), doc(["d"])], state):
        dedup_windows(d, state)
    state.meta = {"checkpoint": {"next_seq": 7, "note": "þ"}}
    path = str(tmp_path / "s.state")
    save_state(state, path)
    loaded = load_state(path)
    assert loaded == state


def test_million_hash_round_trip(tmp_path):
    rng = random.Random(5)
    hashes = {rng.randbytes(16) for _ in range(1_000_000)}
    state = DedupState(doc_hashes=set(list(hashes)[:1000]), window_hashes=hashes)
    path = str(tmp_path / "big.state")
    save_state(state, path)
    loaded = load_state(path)
    members = rng.sample(sorted(hashes), 5000)
    others = [rng.randbytes(16) for _ in range(5000)]
    for h in members + others:
        assert (h in loaded.window_hashes) == (h in hashes)
    assert len(loaded.window_hashes) == len(hashes)


@pytest.mark.parametrize("cut", [3, 9, 20, -1, -4, -10])
def test_truncated_state_refused(tmp_path, cut):
    state = DedupState(window_hashes={bytes([i]) * 16 for i in range(5)}, meta={"k": 1})
    data = state_to_bytes(state)
    with pytest.raises(StateError):
        state_from_bytes(data[:cut])


def test_corrupt_state_refused(tmp_path):
    data = bytearray(state_to_bytes(DedupState(window_hashes={b"\x01" * 16}, meta={"k": "v"})))
    for pos in range(4, len(data)):
        bad = bytearray(data)
        bad[pos] ^= 0x41
        with pytest.raises(StateError):
            state_from_bytes(bytes(bad))
    with pytest.raises(StateError):
        state_from_bytes(b"NOPE" + bytes(data[4:]))
    with pytest.raises(StateError):
        state_from_bytes(bytes(data) + b"x")
    path = tmp_path / "bad.state"
    path.write_bytes(b"DDUP\x01")
    with pytest.raises(StateError):
        load_state(str(path))
