import numpy as np
import pytest

from wordart import fontparse
from wordart.errors import BadPolicy, LengthMismatch
from wordart.shapeparam import (
    FreedomMask,
    ParamVector,
    RegionPolicy,
    apply_update,
    from_params,
    select_region,
    to_params,
)

from oracles import random_closed_params


class TestToParams:
    def test_square_has_32_values(self, square_outline):
        params = to_params(square_outline)
        assert params.values.size == 32
        assert params.contour_sizes == (4,)

    def test_empty_outline(self):
        outline = fontparse.GlyphOutline((), 64.0, 0.0)
        params = to_params(outline)
        assert params.values.size == 0

    def test_round_trip_exact(self, ring_outline):
        params = to_params(ring_outline)
        rebuilt = from_params(params, ring_outline.em_size_px, ring_outline.advance_px)
        assert rebuilt == ring_outline

    def test_random_two_contour_round_trip(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            params = random_closed_params(rng, 2)
            outline = from_params(params, 48.0)
            again = to_params(outline)
            assert np.array_equal(again.values, params.values)
            assert again.contour_sizes == params.contour_sizes

    def test_jsonable_round_trip(self, square_outline):
        params = to_params(square_outline)
        again = ParamVector.from_jsonable(params.to_jsonable())
        assert np.array_equal(again.values, params.values)
        assert again.contour_sizes == params.contour_sizes


class TestSelectRegion:
    def test_all_ratio_one_frees_everything(self, square_outline):
        mask = select_region(square_outline, RegionPolicy("all", deform_ratio=1.0))
        assert mask.free.size == 32
        assert mask.free.all()

    def test_saliency_zero_frees_nothing(self, square_outline):
        mask = select_region(
            square_outline, RegionPolicy("saliency_ratio", deform_ratio=0.0)
        )
        assert not mask.free.any()

    def test_contour_indices_frees_only_hole(self, ring_outline):
        sizes = to_params(ring_outline).contour_sizes
        mask = select_region(
            ring_outline, RegionPolicy("contour_indices", contour_indices=(1,))
        )
        outer_coords = sizes[0] * 8
        assert not mask.free[:outer_coords].any()
        assert mask.free[outer_coords:].all()

    def test_out_of_range_contour(self, ring_outline):
        with pytest.raises(BadPolicy):
            select_region(
                ring_outline, RegionPolicy("contour_indices", contour_indices=(5,))
            )

    def test_bad_ratio_rejected(self):
        with pytest.raises(BadPolicy):
            RegionPolicy("saliency_ratio", deform_ratio=1.5)

    def test_bad_mode_rejected(self):
        with pytest.raises(BadPolicy):
            RegionPolicy("everything")

    def test_deterministic(self, ring_outline):
        policy = RegionPolicy("saliency_ratio", deform_ratio=0.4)
        a = select_region(ring_outline, policy)
        b = select_region(ring_outline, policy)
        assert np.array_equal(a.free, b.free)

    def test_monotone_in_ratio(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            params = random_closed_params(rng, 2)
            outline = from_params(params, 48.0)
            previous = np.zeros(params.values.size, dtype=bool)
            for ratio in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
                mask = select_region(
                    outline, RegionPolicy("saliency_ratio", deform_ratio=ratio)
                )
                assert (previous & ~mask.free).sum() == 0  # nested free sets
                previous = mask.free

    def test_pair_flags_equal(self, ring_outline):
        mask = select_region(
            ring_outline, RegionPolicy("saliency_ratio", deform_ratio=0.5)
        )
        xs = mask.free[0::2]
        ys = mask.free[1::2]
        assert np.array_equal(xs, ys)


class TestApplyUpdate:
    def test_zero_delta_identity(self, square_outline):
        params = to_params(square_outline)
        mask = select_region(square_outline, RegionPolicy("all", deform_ratio=1.0))
        updated = apply_update(params, mask, np.zeros(32))
        assert np.array_equal(updated.values, params.values)

    def test_all_anchored_identity(self, square_outline):
        params = to_params(square_outline)
        mask = FreedomMask(np.zeros(32, dtype=bool))
        updated = apply_update(params, mask, np.full(32, 9.5))
        assert np.array_equal(updated.values, params.values)

    def test_shared_corner_averages(self, square_outline):
        params = to_params(square_outline)
        mask = select_region(square_outline, RegionPolicy("all", deform_ratio=1.0))
        # p3.x of segment 0 duplicates p0.x of segment 1 (indices 6 and 8).
        assert params.values[6] == params.values[8]
        original = params.values[6]
        delta = np.zeros(32)
        delta[6] = 2.0
        delta[8] = 4.0
        updated = apply_update(params, mask, delta)
        assert updated.values[6] == original + 3.0
        assert updated.values[8] == original + 3.0

    def test_closure_restored_after_random_updates(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            params = random_closed_params(rng, 2)
            outline = from_params(params, 48.0)
            mask = select_region(outline, RegionPolicy("all", deform_ratio=1.0))
            delta = rng.normal(0.0, 2.0, params.values.size)
            updated = apply_update(params, mask, delta)
            rebuilt = from_params(updated, 48.0)
            for contour in rebuilt.contours:
                assert contour.segments[0].p0 == contour.segments[-1].p3
                for a, b in zip(contour.segments, contour.segments[1:]):
                    assert a.p3 == b.p0

    def test_anchored_bits_identical(self):
        rng = np.random.default_rng(6)
        params = random_closed_params(rng, 1)
        outline = from_params(params, 48.0)
        mask = select_region(
            outline, RegionPolicy("saliency_ratio", deform_ratio=0.5)
        )
        delta = rng.normal(0.0, 3.0, params.values.size)
        updated = apply_update(params, mask, delta)
        anchored = ~mask.free
        assert np.array_equal(updated.values[anchored], params.values[anchored])

    def test_length_mismatch(self, square_outline):
        params = to_params(square_outline)
        mask = FreedomMask(np.ones(32, dtype=bool))
        with pytest.raises(LengthMismatch):
            apply_update(params, mask, np.zeros(30))
