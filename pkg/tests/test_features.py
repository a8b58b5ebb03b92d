"""Tests for embedding tables, OOV handling, and prosodic scaling."""

import numpy as np
import numpy.testing as npt
import pytest

from sentbound.corpus import LabeledText
from sentbound.errors import ContractError, ParseError
from sentbound.features import (
    EmbeddingTable,
    LexicalEncoder,
    ProsodicEncoder,
    ProsodyStats,
    build_lexical_input,
    build_prosodic_input,
    encode_labels,
    fit_prosody_stats,
    load_embeddings,
)


def write_embedding_file(path, words, dim, seed=0):
    rng = np.random.default_rng(seed)
    lines = [f"{len(words)} {dim}"]
    for word in words:
        values = " ".join(repr(float(v)) for v in rng.standard_normal(dim))
        lines.append(f"{word} {values}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadEmbeddings:
    def test_table_shape_includes_oov_row(self, tmp_path):
        path = tmp_path / "emb.txt"
        write_embedding_file(path, ["casa", "ele", "viu"], 50)
        table = load_embeddings(path)
        assert table.vectors.shape == (4, 50)
        assert table.dim == 50
        assert table.oov_row == 3

    def test_absent_word_maps_to_stable_oov_row(self, tmp_path):
        path = tmp_path / "emb.txt"
        write_embedding_file(path, ["casa"], 8)
        table = load_embeddings(path)
        assert table.lookup("inexistente") == table.oov_row
        assert table.lookup("outra") == table.oov_row

    def test_oov_vector_identical_across_loads(self, tmp_path):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        write_embedding_file(a, ["um"], 8, seed=1)
        write_embedding_file(b, ["dois", "tres"], 8, seed=2)
        ta = load_embeddings(a)
        tb = load_embeddings(b)
        npt.assert_array_equal(ta.vectors[ta.oov_row], tb.vectors[tb.oov_row])

    def test_duplicate_word_rejected(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 2\ncasa 1.0 2.0\ncasa 3.0 4.0\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_embeddings(path)

    def test_keys_are_lowercased(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1 2\nCasa 1.0 2.0\n")
        table = load_embeddings(path)
        assert table.lookup("casa") == 0

    def test_inconsistent_dimension_names_line(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 3\na 1.0 2.0 3.0\nb 1.0 2.0\n")
        with pytest.raises(ParseError) as err:
            load_embeddings(path)
        assert ":3:" in str(err.value)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("3 2\na 1.0 2.0\nb 3.0 4.0\n")
        with pytest.raises(ParseError, match="declared 3"):
            load_embeddings(path)


class TestEmbeddingTable:
    def test_from_tokens_is_sorted_and_deterministic(self):
        rng = np.random.default_rng(5)
        table = EmbeddingTable.from_tokens(["b", "a", "b", "c"], 4, rng)
        assert table.sorted_tokens() == ["a", "b", "c"]
        again = EmbeddingTable.from_tokens(["c", "b", "a"], 4, np.random.default_rng(5))
        npt.assert_array_equal(table.vectors, again.vectors)

    def test_vocab_size_must_match_rows(self):
        with pytest.raises(ContractError):
            EmbeddingTable({"a": 0}, np.zeros((1, 3)))

    def test_encode(self):
        table = EmbeddingTable({"a": 0, "b": 1}, np.arange(9.0).reshape(3, 3))
        npt.assert_array_equal(table.encode(["b", "zzz", "a"]), [1, 2, 0])


def demo_text(m=3, with_prosody=False):
    prosody = np.arange(m * 13, dtype=float).reshape(m, 13) if with_prosody else None
    return LabeledText(
        "demo",
        [f"w{i % 2}" for i in range(m)],
        [f"t{i % 2:02d}" for i in range(m)],
        ["NB"] * (m - 1) + ["B"],
        prosody=prosody,
    )


class TestBuildLexicalInput:
    def test_dimension_is_word_plus_tag(self, rng):
        words = EmbeddingTable.from_tokens(["w0", "w1"], 50, rng)
        tags = EmbeddingTable.from_tokens(["t00", "t01"], 10, rng)
        x = build_lexical_input(demo_text(4), words, tags)
        assert x.shape == (4, 60)

    def test_identical_positions_get_identical_rows(self, rng):
        words = EmbeddingTable.from_tokens(["w0", "w1"], 6, rng)
        tags = EmbeddingTable.from_tokens(["t00", "t01"], 3, rng)
        x = build_lexical_input(demo_text(5), words, tags)
        npt.assert_array_equal(x[0], x[2])
        npt.assert_array_equal(x[1], x[3])

    def test_single_token(self, rng):
        words = EmbeddingTable.from_tokens(["w0"], 50, rng)
        tags = EmbeddingTable.from_tokens(["t00"], 10, rng)
        assert build_lexical_input(demo_text(1), words, tags).shape == (1, 60)

    def test_word_then_tag_order(self, rng):
        words = EmbeddingTable.from_tokens(["w0", "w1"], 2, rng)
        tags = EmbeddingTable.from_tokens(["t00", "t01"], 3, rng)
        x = build_lexical_input(demo_text(2), words, tags)
        npt.assert_array_equal(x[0, :2], words.vectors[words.lookup("w0")])
        npt.assert_array_equal(x[0, 2:], tags.vectors[tags.lookup("t00")])

    def test_needs_a_table(self):
        with pytest.raises(ContractError):
            build_lexical_input(demo_text(2))


class TestProsody:
    def test_identity_stats(self):
        stats = ProsodyStats(np.zeros(13), np.ones(13))
        text = demo_text(3, with_prosody=True)
        npt.assert_array_equal(build_prosodic_input(text, stats), text.prosody)

    def test_output_dimension_is_thirteen(self):
        stats = ProsodyStats(np.zeros(13), np.ones(13))
        assert build_prosodic_input(demo_text(2, True), stats).shape == (2, 13)

    def test_constant_feature_scales_to_zero(self):
        rows = np.tile(np.arange(13.0), (4, 1))
        text = LabeledText("t", ["a"] * 4, ["t00"] * 4, ["NB"] * 4, prosody=rows)
        stats = fit_prosody_stats([text])
        out = build_prosodic_input(text, stats)
        npt.assert_array_equal(out, np.zeros((4, 13)))
        npt.assert_array_equal(stats.std, np.ones(13))

    def test_two_point_stats(self):
        a = LabeledText("a", ["x"], ["t00"], ["B"], prosody=np.zeros((1, 13)))
        b = LabeledText("b", ["x"], ["t00"], ["B"], prosody=np.full((1, 13), 2.0))
        stats = fit_prosody_stats([a, b])
        npt.assert_array_equal(stats.mean, np.ones(13))
        npt.assert_array_equal(stats.std, np.ones(13))

    def test_stats_are_a_pure_function_of_the_inputs(self):
        a = LabeledText("a", ["x"], ["t00"], ["B"], prosody=np.ones((1, 13)))
        first = fit_prosody_stats([a])
        second = fit_prosody_stats([a])
        npt.assert_array_equal(first.mean, second.mean)
        npt.assert_array_equal(first.std, second.std)

    def test_missing_prosody_points_to_lexical_mode(self):
        stats = ProsodyStats(np.zeros(13), np.ones(13))
        with pytest.raises(ContractError, match="lexical-only"):
            build_prosodic_input(demo_text(2, with_prosody=False), stats)

    def test_no_prosody_anywhere(self):
        with pytest.raises(ContractError):
            fit_prosody_stats([demo_text(2)])


class TestEncoders:
    def test_labels_encoding(self):
        assert encode_labels(["NB", "B", "NB"]).tolist() == [0, 1, 0]

    def test_lexical_encoder_roundtrip(self, rng):
        words = EmbeddingTable.from_tokens(["w0", "w1"], 4, rng)
        tags = EmbeddingTable.from_tokens(["t00", "t01"], 2, rng)
        enc = LexicalEncoder(words, tags)
        item = enc.encode(demo_text(3))
        assert item.word_ids.tolist() == [0, 1, 0]
        assert item.tag_ids.tolist() == [0, 1, 0]
        assert item.label01.tolist() == [0, 0, 1]

    def test_prosodic_encoder(self):
        stats = ProsodyStats(np.zeros(13), np.ones(13))
        item = ProsodicEncoder(stats).encode(demo_text(2, True))
        assert item.dense.shape == (2, 13)
        assert item.word_ids is None
