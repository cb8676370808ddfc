"""Tests for tensor-train construction, rounding, evaluation, and the
pixel-prefix rank bounds."""

import itertools

import numpy as np
import pytest

from pixelrank.images import (
    BinaryImage,
    FamilyMeta,
    ImageFamily,
    gen_random_family,
    gen_rectangle_outlines,
    gen_vertical_bars,
)
from pixelrank.rankcore import exact_rank, fixed_row_unfolding, pixel_prefix_unfolding
from pixelrank.certify import row_configurations
from pixelrank.tt import (
    TensorTrain,
    block_partition_bound,
    elementary_train,
    family_dense_vector,
    load_tt,
    save_tt,
    tt_eval,
    tt_eval_batch,
    tt_from_dense,
    tt_from_family,
    tt_round,
    tt_scale,
    tt_sum,
    tt_sum_of_members,
    tt_zero,
    bond_scaling_report,
)


def _single(n, text):
    return ImageFamily(n, [BinaryImage.from_text(n, text)], FamilyMeta("one"))


def _all_images(n):
    for bits in itertools.product((0, 1), repeat=n * n):
        yield BinaryImage(n, bytes(bits))


class TestConstruction:
    def test_single_member_all_bonds_one(self):
        train = tt_from_family(_single(3, "111101111"))
        assert train.bond_dims == [1] * 10

    def test_empty_family_zero_function(self):
        train = tt_from_family(ImageFamily(2, [], FamilyMeta("none")))
        for img in _all_images(2):
            assert tt_eval(train, img) == 0.0

    def test_exactness_exhaustive_n3(self):
        fam = gen_vertical_bars(3, 2)
        train = tt_from_family(fam)
        bits = np.array(
            [list(img.bits) for img in _all_images(3)], dtype=np.uint8
        )
        values = tt_eval_batch(train, bits)
        truth = np.array(
            [fam.indicator(BinaryImage(3, row.tobytes())) for row in bits]
        )
        assert np.max(np.abs(values - truth)) < 1e-6

    def test_exactness_exhaustive_n4(self):
        fam = gen_rectangle_outlines(4, 3)
        train = tt_from_family(fam)
        bits = np.array(
            [list(b) for b in itertools.product((0, 1), repeat=16)], dtype=np.uint8
        )
        values = tt_eval_batch(train, bits)
        truth = np.zeros(len(bits))
        truth[[int("".join(map(str, img.bits)), 2) for img in fam]] = 1.0
        assert np.max(np.abs(values - truth)) < 1e-6

    def test_minimal_bonds_equal_prefix_ranks_n4(self):
        fam = gen_rectangle_outlines(4, 3)
        train = tt_from_family(fam)
        expected = (
            [1]
            + [exact_rank(pixel_prefix_unfolding(fam, k)) for k in range(1, 16)]
            + [1]
        )
        assert train.bond_dims == expected

    def test_matches_explicit_member_sum(self):
        fam = gen_vertical_bars(3, 2)
        direct = tt_round(tt_sum_of_members(fam))
        fused = tt_from_family(fam)
        assert direct.bond_dims == fused.bond_dims
        bits = np.array([list(img.bits) for img in _all_images(3)], dtype=np.uint8)
        assert np.max(np.abs(tt_eval_batch(direct, bits) - tt_eval_batch(fused, bits))) < 1e-9

    def test_member_sum_has_member_count_bonds(self):
        fam = gen_vertical_bars(3, 2)
        raw = tt_sum_of_members(fam)
        assert set(raw.bond_dims[1:-1]) == {len(fam)}


class TestEval:
    def test_member_and_non_member_values(self):
        fam = gen_rectangle_outlines(4, 3)
        train = tt_from_family(fam)
        for img in fam:
            assert tt_eval(train, img) == pytest.approx(1.0, abs=1e-6)
        blank = BinaryImage(4, bytes(16))
        assert tt_eval(train, blank) == pytest.approx(0.0, abs=1e-6)

    def test_dimension_mismatch(self):
        train = tt_from_family(gen_rectangle_outlines(4, 3))
        with pytest.raises(ValueError):
            tt_eval(train, BinaryImage(3, bytes(9)))
        with pytest.raises(ValueError):
            tt_eval_batch(train, np.zeros((2, 9), dtype=np.uint8))

    def test_linearity_of_direct_sum(self):
        # Disjoint families: the summed train evaluates to f1 + f2.
        f1 = gen_vertical_bars(3, 3)
        f2 = _single(3, "111101111")
        t1 = tt_sum_of_members(f1)
        t2 = tt_sum_of_members(f2)
        combined = tt_sum(t1, t2)
        for img in _all_images(3):
            expected = f1.indicator(img) + f2.indicator(img)
            assert tt_eval(combined, img) == pytest.approx(expected, abs=1e-9)


class TestRounding:
    def test_idempotent_on_minimal_train(self):
        train = tt_from_family(gen_rectangle_outlines(4, 3))
        again = tt_round(train)
        assert again.bond_dims == train.bond_dims
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, size=(200, 16), dtype=np.uint8)
        assert np.max(np.abs(tt_eval_batch(again, bits) - tt_eval_batch(train, bits))) < 1e-9

    def test_duplicate_member_halves_round_to_single(self):
        img = BinaryImage.from_text(3, "111101111")
        doubled = tt_sum(
            tt_scale(elementary_train(img), 0.5), tt_scale(elementary_train(img), 0.5)
        )
        rounded = tt_round(doubled)
        assert rounded.bond_dims == [1] * 10
        assert tt_eval(rounded, img) == pytest.approx(1.0, abs=1e-9)

    def test_rounding_never_increases_bonds(self):
        fam = gen_random_family(3, 20, seed=3)
        raw = tt_sum_of_members(fam)
        rounded = tt_round(raw)
        assert all(
            r <= orig for r, orig in zip(rounded.bond_dims, raw.bond_dims)
        )

    def test_function_preserved_on_members_and_probes(self):
        fam = gen_random_family(3, 15, seed=6)
        raw = tt_sum_of_members(fam)
        rounded = tt_round(raw)
        bits = np.array([list(img.bits) for img in _all_images(3)], dtype=np.uint8)
        assert np.max(np.abs(tt_eval_batch(rounded, bits) - tt_eval_batch(raw, bits))) < 1e-6


class TestDenseOracle:
    @pytest.mark.parametrize(
        "family",
        [
            gen_vertical_bars(3, 2),
            gen_random_family(3, 10, seed=8),
            gen_rectangle_outlines(3, 3),
        ],
        ids=["bars3", "random3", "rect3"],
    )
    def test_dense_tt_svd_matches_sparse_route(self, family):
        sparse = tt_from_family(family)
        dense = tt_from_dense(family_dense_vector(family))
        assert dense.bond_dims == sparse.bond_dims
        bits = np.array([list(img.bits) for img in _all_images(3)], dtype=np.uint8)
        assert np.max(np.abs(tt_eval_batch(dense, bits) - tt_eval_batch(sparse, bits))) < 1e-6

    def test_rounded_dims_equal_dense_oracle_ranks(self):
        from pixelrank.rankcore import Bipartition, dense_unfolding_oracle

        fam = gen_vertical_bars(3, 2)
        train = tt_from_family(fam)
        for k in range(1, 9):
            oracle = np.linalg.matrix_rank(
                dense_unfolding_oracle(fam, Bipartition.pixel_prefix(k, 3))
            )
            assert train.bond_dims[k] == oracle


class TestBlockPartitionBound:
    def test_row_boundary_cut_reduces_to_row_sum(self):
        fam = gen_rectangle_outlines(4, 3)
        for i in (1, 2, 3):
            expected = sum(
                exact_rank(fixed_row_unfolding(fam, i, y))
                for y in row_configurations(fam, i)
            )
            assert block_partition_bound(fam, i * 4) == expected

    def test_empty_family(self):
        assert block_partition_bound(ImageFamily(3, [], FamilyMeta("none")), 4) == 0

    def test_bounds_dominate_prefix_ranks(self):
        fam = gen_rectangle_outlines(4, 3)
        for k in range(1, 16):
            assert exact_rank(pixel_prefix_unfolding(fam, k)) <= block_partition_bound(fam, k)

    def test_specific_mid_row_cut(self):
        fam = gen_rectangle_outlines(4, 3)
        bound = block_partition_bound(fam, 6)
        assert bound >= exact_rank(pixel_prefix_unfolding(fam, 6))

    def test_out_of_range(self):
        fam = gen_rectangle_outlines(4, 3)
        with pytest.raises(ValueError):
            block_partition_bound(fam, 16)


class TestBondScalingReport:
    def test_structured_slope_and_random_contrast(self):
        report = bond_scaling_report("rect", [4, 8], gen_params={"min_side": 3})
        assert report.scaling.slope <= 3.0
        for n in (4, 8):
            dims = report.bond_dims[n]
            bounds = report.block_bounds[n]
            assert all(
                dims[k] <= bounds[k - 1] for k in range(1, n * n)
            )
            assert report.random_max_bond[n] >= max(dims)


class TestSerialization:
    def test_round_trip_bit_exact_eval(self, tmp_path):
        fam = gen_rectangle_outlines(4, 3)
        train = tt_from_family(fam)
        path = tmp_path / "rect4.tt"
        save_tt(train, path)
        loaded = load_tt(path)
        assert loaded.bond_dims == train.bond_dims
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, size=(500, 16), dtype=np.uint8)
        a = tt_eval_batch(train, bits)
        b = tt_eval_batch(loaded, bits)
        assert np.array_equal(a, b)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.tt"
        path.write_text("not a train\n")
        with pytest.raises(ValueError):
            load_tt(path)


class TestTrainValidation:
    def test_bond_chain_checked(self):
        good = tt_zero(2)
        assert good.bond_dims == [1, 1, 1, 1, 1]
        cores = [np.zeros((2, 1, 2)), np.zeros((2, 3, 1)), np.zeros((2, 1, 1)), np.zeros((2, 1, 1))]
        with pytest.raises(ValueError):
            TensorTrain(cores)

    def test_boundary_checked(self):
        cores = [np.zeros((2, 2, 1))] + [np.zeros((2, 1, 1))] * 3
        with pytest.raises(ValueError):
            TensorTrain(cores)

    def test_core_count_must_be_square(self):
        with pytest.raises(ValueError):
            TensorTrain([np.zeros((2, 1, 1))] * 3)
