import random

import pytest
from hypothesis import given, strategies as st

from oracles import exhaustive_min_segmentation, levenshtein_dp, levenshtein_recursive
from steval.align import Segmentation, edit_distance, resegment, resegment_all, wer
from steval.evalset import load_system_output
from steval.tokenization import TokenStream, TokenizationLevel, concat_streams

WORD = TokenizationLevel.WORD
CHAR = TokenizationLevel.CHARACTER


def chars(text):
    return TokenStream(tuple(text), CHAR)


def words(text):
    return TokenStream(tuple(text.split()), WORD)


class TestEditDistance:
    def test_identity(self):
        assert edit_distance(words("a b c"), words("a b c")) == 0

    def test_pure_insertion(self):
        assert edit_distance(TokenStream((), WORD), words("a b")) == 2

    def test_kitten_sitting(self):
        a, b = chars("kitten"), chars("sitting")
        oracle = levenshtein_recursive(tuple("kitten"), tuple("sitting"))
        assert oracle == 3
        assert edit_distance(a, b) == oracle

    def test_mixed_levels_rejected(self):
        with pytest.raises(ValueError, match="mixed"):
            edit_distance(chars("ab"), words("a b"))

    @given(
        st.text(alphabet="abc", max_size=12),
        st.text(alphabet="abc", max_size=12),
    )
    def test_matches_recursive_oracle(self, a, b):
        assert edit_distance(chars(a), chars(b)) == levenshtein_recursive(
            tuple(a), tuple(b)
        )

    @given(st.text(alphabet="abcd", max_size=15), st.text(alphabet="abcd", max_size=15))
    def test_symmetry(self, a, b):
        assert edit_distance(chars(a), chars(b)) == edit_distance(chars(b), chars(a))

    @given(st.text(alphabet="ab", max_size=12), st.text(alphabet="ab", max_size=12))
    def test_bounded_by_longer_side(self, a, b):
        assert edit_distance(chars(a), chars(b)) <= max(len(a), len(b))


class TestAlignmentCost:
    def test_distance_bounded_by_longer_side(self):
        from steval.align import alignment_cost

        rng = random.Random(3)
        for _ in range(50):
            a = tuple(rng.choice("ab") for _ in range(rng.randint(0, 10)))
            b = tuple(rng.choice("ab") for _ in range(rng.randint(0, 10)))
            cost = alignment_cost(TokenStream(a, CHAR), TokenStream(b, CHAR))
            assert cost.distance <= max(len(a), len(b))
            assert cost.ref_len == len(b)

    def test_negative_fields_rejected(self):
        from steval.align import AlignmentCost

        with pytest.raises(ValueError):
            AlignmentCost(-1, 3)


class TestWer:
    def test_identical_zero(self):
        assert wer(words("x y"), words("x y")) == 0.0

    def test_empty_hyp_all_deletions(self):
        assert wer(TokenStream((), WORD), words("a b c d")) == 1.0

    def test_one_substitution_in_three(self):
        assert wer(words("a x c"), words("a b c")) == pytest.approx(1 / 3)

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError, match="empty reference"):
            wer(words("a"), TokenStream((), WORD))


def random_instance(rng, max_hyp=12, max_k=4, alphabet="abc", max_seg=6):
    n = rng.randint(0, max_hyp)
    k = rng.randint(1, max_k)
    hyp = tuple(rng.choice(alphabet) for _ in range(n))
    refs = [
        tuple(rng.choice(alphabet) for _ in range(rng.randint(0, max_seg)))
        for _ in range(k)
    ]
    return hyp, refs


class TestResegment:
    def test_exact_match_two_segments(self):
        seg = resegment(words("a b c d"), [words("a b"), words("c d")])
        assert seg.cut_points == (0, 2, 4)
        assert seg.total_distance == 0

    def test_single_segment_noop(self):
        seg = resegment(words("a b c d"), [words("a b c d")])
        assert seg.cut_points == (0, 4)
        assert seg.total_distance == 0

    def test_empty_refs_rejected(self):
        with pytest.raises(ValueError):
            resegment(words("a"), [])

    def test_empty_hyp_all_segments_empty(self):
        refs = [words("a b"), words("c")]
        seg = resegment(TokenStream((), WORD), refs)
        assert seg.cut_points == (0, 0, 0)
        assert seg.total_distance == 3

    def test_boundary_extras_attach_to_earlier_segment(self):
        seg = resegment(words("a x b"), [words("a"), words("b")])
        assert seg.cut_points == (0, 2, 3)
        assert seg.total_distance == 1

    def test_oracle_on_random_instances(self):
        rng = random.Random(20240610)
        for _ in range(300):
            hyp, refs = random_instance(rng)
            got = resegment(
                TokenStream(hyp, CHAR), [TokenStream(r, CHAR) for r in refs]
            )
            assert got.total_distance == exhaustive_min_segmentation(hyp, list(refs))

    def test_structure_on_random_instances(self):
        rng = random.Random(99)
        for _ in range(100):
            hyp, refs = random_instance(rng)
            hyp_s = TokenStream(hyp, CHAR)
            refs_s = [TokenStream(r, CHAR) for r in refs]
            seg = resegment(hyp_s, refs_s)
            assert seg.segment_count == len(refs)
            pieces = seg.segments(hyp_s)
            assert concat_streams(pieces).tokens == hyp

    def test_decomposition_identity_random(self):
        rng = random.Random(7)
        for _ in range(60):
            hyp, refs = random_instance(rng, max_hyp=40, max_k=5, max_seg=12)
            hyp_s = TokenStream(hyp, CHAR)
            refs_s = [TokenStream(r, CHAR) for r in refs]
            seg = resegment(hyp_s, refs_s)
            concat = concat_streams(refs_s) if refs_s else TokenStream((), CHAR)
            assert seg.total_distance == edit_distance(hyp_s, concat)
            per_segment = sum(
                levenshtein_dp(p.tokens, r) for p, r in zip(seg.segments(hyp_s), refs)
            )
            assert per_segment == seg.total_distance

    def test_idempotent_cut_points(self):
        rng = random.Random(11)
        for _ in range(50):
            hyp, refs = random_instance(rng, max_hyp=20)
            hyp_s = TokenStream(hyp, CHAR)
            refs_s = [TokenStream(r, CHAR) for r in refs]
            seg = resegment(hyp_s, refs_s)
            pieces = seg.segments(hyp_s)
            again = resegment(concat_streams(pieces), refs_s)
            assert again.cut_points == seg.cut_points

    def test_memory_modes_identical(self):
        rng = random.Random(42)
        for _ in range(100):
            hyp, refs = random_instance(rng, max_hyp=30, max_k=5, max_seg=10)
            hyp_s = TokenStream(hyp, CHAR)
            refs_s = [TokenStream(r, CHAR) for r in refs]
            full = resegment(hyp_s, refs_s, mode="full")
            linear = resegment(hyp_s, refs_s, mode="linear", max_cells=24)
            assert full.cut_points == linear.cut_points
            assert full.total_distance == linear.total_distance
            assert not full.approximate and not linear.approximate

    def test_unique_optimum_boundary_recovered(self):
        # All tokens distinct, so the zero-cost alignment is unique and the
        # drifted input segmentation must be undone exactly.
        refs = [words("w1 w2 w3 w4 w5"), words("v1 v2 v3 v4 v5")]
        hyp = concat_streams(refs)
        seg = resegment(hyp, refs)
        assert seg.cut_points == (0, 5, 10)
        assert seg.total_distance == 0
        assert seg.total_distance == exhaustive_min_segmentation(
            hyp.tokens, [r.tokens for r in refs]
        )

    def test_band_flags_approximate(self):
        seg = resegment(words("a b c d"), [words("a b"), words("c d")], band=2)
        assert seg.approximate
        assert seg.total_distance == 0

    def test_wide_band_matches_exact(self):
        rng = random.Random(13)
        for _ in range(30):
            hyp, refs = random_instance(rng, max_hyp=25, max_seg=8)
            hyp_s = TokenStream(hyp, CHAR)
            refs_s = [TokenStream(r, CHAR) for r in refs]
            exact = resegment(hyp_s, refs_s)
            banded = resegment(hyp_s, refs_s, band=200)
            assert banded.total_distance == exact.total_distance

    def test_narrow_band_upper_bounds(self):
        rng = random.Random(14)
        for _ in range(30):
            hyp, refs = random_instance(rng, max_hyp=25, max_seg=8)
            hyp_s = TokenStream(hyp, CHAR)
            refs_s = [TokenStream(r, CHAR) for r in refs]
            exact = resegment(hyp_s, refs_s)
            banded = resegment(hyp_s, refs_s, band=1)
            assert banded.total_distance >= exact.total_distance


class TestSegmentationType:
    def test_rejects_decreasing_cuts(self):
        with pytest.raises(ValueError):
            Segmentation((0, 3, 2), 0)

    def test_rejects_nonzero_start(self):
        with pytest.raises(ValueError):
            Segmentation((1, 2), 0)


class TestResegmentSystemOutput:
    def test_already_parallel_identity(self, mini_workdir, mini_testset_resegmented):
        testset = mini_testset_resegmented
        output = testset.systems["sysA"]
        reseg, diags = resegment_all(output, testset, WORD, reference_set="new")
        assert reseg.resegmented
        assert reseg.segments_by_doc == output.segments_by_doc

    def test_blob_becomes_parallel(self, mini_workdir, mini_testset):
        raw = load_system_output(mini_workdir["raw_manifests"]["sysC"], mini_testset)
        assert not raw.resegmented
        reseg, diags = resegment_all(raw, mini_testset, WORD, reference_set="new")
        assert reseg.resegmented
        for doc in mini_testset.documents:
            assert len(reseg.segments_by_doc[doc.doc_id]) == len(doc.segments)
            joined_in = " ".join(
                " ".join(line.split()) for line in raw.segments_by_doc[doc.doc_id]
            ).split()
            joined_out = " ".join(reseg.segments_by_doc[doc.doc_id]).split()
            assert joined_in == joined_out

    def test_unknown_document_rejected(self, mini_testset):
        from steval.align import resegment_system_output
        from steval.evalset import SystemOutput

        stray = SystemOutput(
            "sysQ", mini_testset.condition, {"talk01": ["bla"]}, False
        )
        with pytest.raises(ValueError, match="no output"):
            resegment_system_output(stray, mini_testset.document("talk02"), WORD)
