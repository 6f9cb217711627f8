"""N-gram model: counting, discounting, smoothing recursion, file format.

The probability oracle is ``kn_reference.ReferenceKn``: the same recursion
written naively over exact rationals.  On the 4-token corpus the key value
is also frozen by hand: with discounts 0.6 (bigrams, from count-of-counts
3/(3+2)) and 0.5 (continuation unigrams, 2/(2+2)),
P(b|a) = (2-0.6)/2 + 0.3 * [(1-0.5)/4 + 0.375/5] = 0.7 + 0.3*0.2 = 0.76.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from kn_reference import ReferenceKn, brute_continuation, brute_counts

from authorlm import kn
from authorlm import textproc as tp


def make_corpus(token_sentences, order):
    vocab = tp.build_vocabulary(token_sentences)
    processed = tp.encode(token_sentences, vocab, order=order)
    return vocab, processed


def abab(order=2):
    return make_corpus([["a", "b", "a", "b"]], order)


class TestCount:
    def test_abab_bigrams(self):
        vocab, pc = abab()
        tables = kn.count(pc.sentences, 2)
        a, b = vocab.index_of("a"), vocab.index_of("b")
        assert tables.raw_counts(2)[(a, b)] == 2
        assert tables.raw_counts(2)[(b, a)] == 1

    def test_abab_continuation_of_b(self):
        vocab, pc = abab()
        tables = kn.count(pc.sentences, 2)
        b = vocab.index_of("b")
        assert tables.continuation_counts(1)[(b,)] == 1

    def test_matches_bruteforce_recount(self):
        rng = np.random.default_rng(17)
        sentences = [
            [f"w{i}" for i in rng.integers(0, 6, size=rng.integers(1, 9))]
            for _ in range(30)
        ]
        vocab, pc = make_corpus(sentences, 3)
        tables = kn.count(pc.sentences, 3)
        raw = brute_counts(pc.sentences, 3)
        for k in range(1, 4):
            assert dict(tables.raw_counts(k)) == dict(raw[k])
        for k in (1, 2):
            assert dict(tables.continuation_counts(k)) == brute_continuation(raw, k)

    def test_count_consistency_boundary_adjusted(self):
        # a context's count equals its right-extensions plus the times it
        # closes a sentence
        rng = np.random.default_rng(23)
        sentences = [
            [f"w{i}" for i in rng.integers(0, 5, size=rng.integers(1, 7))]
            for _ in range(20)
        ]
        vocab, pc = make_corpus(sentences, 3)
        tables = kn.count(pc.sentences, 3)
        for k in (1, 2):
            finals = {}
            for s in pc.sentences:
                tail = s[len(s) - k :]
                finals[tail] = finals.get(tail, 0) + 1
            for ctx, c in tables.raw_counts(k).items():
                extensions = sum(
                    cnt
                    for gram, cnt in tables.raw_counts(k + 1).items()
                    if gram[:-1] == ctx
                )
                assert c == extensions + finals.get(ctx, 0)

    def test_rejects_unpadded(self):
        with pytest.raises(ValueError, match="padded"):
            kn.count([(3, 4, 1)], 3)  # needs two start ids


class TestDiscounts:
    def test_equal_n1_n2_gives_third(self):
        tables = kn.CountTables(order=1, raw=({(3,): 1, (4,): 2},), continuation=())
        assert kn.estimate_discounts(tables) == (pytest.approx(1 / 3),)

    def test_no_doubletons_clamps(self):
        tables = kn.CountTables(order=1, raw=({(3,): 1, (4,): 1},), continuation=())
        assert kn.estimate_discounts(tables) == (0.95,)

    def test_fallback_when_no_small_counts(self):
        tables = kn.CountTables(order=1, raw=({(3,): 5, (4,): 7},), continuation=())
        assert kn.estimate_discounts(tables) == (0.5,)

    def test_abab_hand_values(self):
        _, pc = abab()
        tables = kn.count(pc.sentences, 2)
        assert kn.estimate_discounts(tables) == (pytest.approx(0.5), pytest.approx(0.6))


class TestProbabilities:
    def test_abab_hand_value(self):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        a, b = vocab.index_of("a"), vocab.index_of("b")
        assert math.exp(model.log_prob([a], b)) == pytest.approx(0.76, abs=1e-12)

    def test_abab_matches_reference_everywhere(self):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        ref = ReferenceKn(pc.sentences, 2, vocab.size)
        for c in range(vocab.size):
            for w in range(vocab.size):
                got = math.exp(model.log_prob([c], w))
                assert got == pytest.approx(float(ref.prob([c], w)), abs=1e-12)

    @pytest.mark.parametrize(
        "sentences",
        [
            # two small order-3 corpora, both well under 50 tokens
            [
                ["the", "cat", "sat", "on", "the", "mat"],
                ["the", "dog", "sat", "on", "the", "log"],
                ["a", "cat", "and", "a", "dog"],
            ],
            [
                ["to", "be", "or", "not", "to", "be"],
                ["to", "see", "or", "not", "to", "see"],
                ["be", "not"],
                ["see", "not", "to", "be"],
            ],
        ],
    )
    def test_small_corpora_match_reference(self, sentences):
        vocab, pc = make_corpus(sentences, 3)
        model = kn.train_model(pc.sentences, 3, vocab.size)
        ref = ReferenceKn(pc.sentences, 3, vocab.size)
        rng = np.random.default_rng(5)
        contexts = {tuple(s[i : i + 2]) for s in pc.sentences for i in range(len(s) - 2)}
        contexts |= {tuple(rng.integers(0, vocab.size, size=2)) for _ in range(40)}
        for ctx in sorted(contexts):
            for w in range(vocab.size):
                got = math.exp(model.log_prob(ctx, w))
                want = float(ref.prob(ctx, w))
                assert got == pytest.approx(want, abs=1e-10), (ctx, w)

    def test_reference_distributions_sum_to_exactly_one(self):
        # in exact arithmetic the interpolation telescopes to 1
        vocab, pc = abab()
        ref = ReferenceKn(pc.sentences, 2, vocab.size)
        for c in range(vocab.size):
            assert sum(ref.prob([c], w) for w in range(vocab.size)) == Fraction(1)

    def test_normalization_random_contexts(self):
        rng = np.random.default_rng(31)
        sentences = [
            [f"w{i}" for i in rng.integers(0, 12, size=rng.integers(1, 8))]
            for _ in range(40)
        ]
        vocab, pc = make_corpus(sentences, 3)
        model = kn.train_model(pc.sentences, 3, vocab.size)
        for _ in range(100):
            ctx = tuple(rng.integers(0, vocab.size, size=2))
            total = math.fsum(
                math.exp(model.log_prob(ctx, w)) for w in range(vocab.size)
            )
            assert abs(total - 1.0) < 1e-8

    def test_positivity(self):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        for c in range(vocab.size):
            for w in range(vocab.size):
                assert math.isfinite(model.log_prob([c], w))

    def test_empty_tables_uniform(self):
        tables = kn.count([], 2)
        model = kn.build_model(tables, vocab_size=9)
        for w in range(9):
            assert model.log_prob([3], w) == pytest.approx(math.log(1 / 9), abs=1e-12)

    def test_rejects_out_of_range(self):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        with pytest.raises(ValueError, match="out of range"):
            model.log_prob([0], vocab.size)
        with pytest.raises(ValueError, match="out of range"):
            model.log_prob([vocab.size], 0)

    def test_long_context_truncates(self):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        a, b = vocab.index_of("a"), vocab.index_of("b")
        assert model.log_prob([b, b, b, a], b) == model.log_prob([a], b)


class TestSerialization:
    def roundtrip(self, tmp_path, sentences, order):
        vocab, pc = make_corpus(sentences, order)
        model = kn.train_model(pc.sentences, order, vocab.size)
        path = tmp_path / "m.arpa"
        kn.save_model(model, path)
        return vocab, model, kn.load_model(path)

    def test_queries_bit_identical(self, tmp_path):
        rng = np.random.default_rng(41)
        sentences = [
            [f"w{i}" for i in rng.integers(0, 10, size=rng.integers(1, 9))]
            for _ in range(25)
        ]
        vocab, model, loaded = self.roundtrip(tmp_path, sentences, 3)
        assert loaded.order == model.order
        assert loaded.vocab_size == model.vocab_size
        assert loaded.discounts == model.discounts
        for _ in range(1000):
            ctx = tuple(rng.integers(0, vocab.size, size=rng.integers(0, 3)))
            w = int(rng.integers(0, vocab.size))
            assert model.log_prob(ctx, w) == loaded.log_prob(ctx, w)

    def test_start_only_contexts_survive_roundtrip(self, tmp_path):
        # order-3 sentence-initial contexts carry back-off weight but no
        # probability entry; they must round-trip through the na marker
        sentences = [["x", "y"], ["x", "z"]]
        vocab, model, loaded = self.roundtrip(tmp_path, sentences, 3)
        ctx = (tp.START_ID, tp.START_ID)
        assert ctx in model.bows[2]
        assert ctx not in model.probs[2]
        for w in range(vocab.size):
            assert model.log_prob(ctx, w) == loaded.log_prob(ctx, w)

    def test_truncated_file_names_line(self, tmp_path):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        path = tmp_path / "m.arpa"
        kn.save_model(model, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-3]) + "\n")
        with pytest.raises(kn.KnParseError, match=r":\d+:"):
            kn.load_model(path)

    def test_bad_count_header(self, tmp_path):
        vocab, pc = abab()
        model = kn.train_model(pc.sentences, 2, vocab.size)
        path = tmp_path / "m.arpa"
        kn.save_model(model, path)
        text = path.read_text().replace("ngram 2=", "ngram 2=9")
        path.write_text(text)
        with pytest.raises(kn.KnParseError, match="entries"):
            kn.load_model(path)

    def test_bad_probability_field(self, tmp_path):
        path = tmp_path / "m.arpa"
        path.write_text(
            "# authorlm-kn 1\n# order 1\n# vocab 2\n# discounts 0.5\n"
            "\\data\\\nngram 1=2\n\\1-grams:\nxx\t0\n-0.3\t1\n\\end\\\n"
        )
        with pytest.raises(kn.KnParseError, match="8"):
            kn.load_model(path)

    def test_handwritten_unigram_file(self, tmp_path):
        path = tmp_path / "hand.arpa"
        path.write_text(
            "# authorlm-kn 1\n"
            "# order 1\n"
            "# vocab 2\n"
            "# discounts 0.5\n"
            "\\data\\\n"
            "ngram 1=2\n"
            "\\1-grams:\n"
            f"{math.log10(0.25)!r}\t0\n"
            f"{math.log10(0.75)!r}\t1\n"
            "\\end\\\n"
        )
        model = kn.load_model(path)
        assert math.exp(model.log_prob([], 0)) == pytest.approx(0.25, abs=1e-12)
        assert math.exp(model.log_prob([], 1)) == pytest.approx(0.75, abs=1e-12)

    def test_missing_unigram_entry(self, tmp_path):
        path = tmp_path / "hand.arpa"
        path.write_text(
            "# authorlm-kn 1\n# order 1\n# vocab 3\n"
            "\\data\\\nngram 1=2\n\\1-grams:\n-0.5\t0\n-0.5\t2\n\\end\\\n"
        )
        with pytest.raises(kn.KnParseError, match="misses id 1"):
            kn.load_model(path)
