from fractions import Fraction

import numpy as np
import pytest

from cellpipe.augment import (
    CAYLEY_TABLE,
    D4_ELEMENTS,
    DEFAULT_GAMMAS,
    FLIP_H,
    IDENTITY,
    ROT90,
    AugmentationVariant,
    PowerLawParams,
    apply_d4_box,
    apply_d4_image,
    default_power_law_schedule,
    derived_image_id,
    expand,
    power_law,
    to_grayscale,
    transform_pixels,
)
from cellpipe.model import BoundingBox, ImageBuffer

from conftest import random_box, tiny_dataset


# Independent per-pixel maps: destination (x', y') of source pixel (x, y)
# in a W x H grid. Used to brute-force check the array implementation.
PIXEL_MAPS = {
    "identity": lambda x, y, w, h: (x, y),
    "rot90": lambda x, y, w, h: (y, w - 1 - x),
    "rot180": lambda x, y, w, h: (w - 1 - x, h - 1 - y),
    "rot270": lambda x, y, w, h: (h - 1 - y, x),
    "fliph": lambda x, y, w, h: (w - 1 - x, y),
    "flipv": lambda x, y, w, h: (x, h - 1 - y),
    "transpose": lambda x, y, w, h: (y, x),
    "antitranspose": lambda x, y, w, h: (h - 1 - y, w - 1 - x),
}


def reference_d4_image(img: ImageBuffer, g) -> ImageBuffer:
    """Pixel-by-pixel oracle for apply_d4_image."""
    h, w = img.height, img.width
    out_w, out_h = g.output_size(w, h)
    out = np.zeros((out_h, out_w, img.channels))
    pmap = PIXEL_MAPS[g.token]
    for y in range(h):
        for x in range(w):
            nx, ny = pmap(x, y, w, h)
            out[ny, nx] = img.pixels[y, x]
    return ImageBuffer(out)


def rasterize(box: BoundingBox, width: int, height: int) -> ImageBuffer:
    mask = np.zeros((height, width, 1))
    mask[int(box.ymin) : int(box.ymax), int(box.xmin) : int(box.xmax)] = 1.0
    return ImageBuffer(mask)


def mask_bounds(buf: ImageBuffer) -> BoundingBox:
    rows, cols = np.nonzero(buf.pixels[:, :, 0])
    return BoundingBox(
        float(cols.min()), float(rows.min()), float(cols.max() + 1), float(rows.max() + 1)
    )


class TestD4Group:
    def test_eight_elements(self):
        assert len(D4_ELEMENTS) == 8
        assert len({g.token for g in D4_ELEMENTS}) == 8

    def test_cayley_rows_and_columns_are_permutations(self):
        for i in range(8):
            assert sorted(CAYLEY_TABLE[i]) == list(range(8))
            assert sorted(row[i] for row in CAYLEY_TABLE) == list(range(8))

    def test_identity_row_and_column(self):
        for g in D4_ELEMENTS:
            assert g.compose(IDENTITY) is g
            assert IDENTITY.compose(g) is g

    def test_inverses(self):
        for g in D4_ELEMENTS:
            assert g.compose(g.inverse()) is IDENTITY
            assert g.inverse().compose(g) is IDENTITY

    def test_cayley_table_matches_functional_composition_on_images(self, nprng):
        img = ImageBuffer(nprng.random((3, 5, 1)))
        for g in D4_ELEMENTS:
            for h in D4_ELEMENTS:
                via_table = apply_d4_image(img, g.compose(h))
                step_by_step = apply_d4_image(apply_d4_image(img, h), g)
                assert via_table == step_by_step, (g.token, h.token)

    def test_cayley_table_matches_functional_composition_on_boxes(self, rng):
        w, h_dim = 37, 23
        for _ in range(100):
            box = random_box(rng, w, h_dim)
            for g in D4_ELEMENTS:
                for h in D4_ELEMENTS:
                    wh, hh = h.output_size(w, h_dim)
                    step = apply_d4_box(apply_d4_box(box, h, w, h_dim), g, wh, hh)
                    direct = apply_d4_box(box, g.compose(h), w, h_dim)
                    assert step == direct


class TestD4Image:
    def test_identity(self, nprng):
        img = ImageBuffer(nprng.random((4, 6, 3)))
        assert apply_d4_image(img, IDENTITY) == img

    def test_rot90_four_times_is_identity(self, nprng):
        img = ImageBuffer(nprng.random((4, 6, 3)))
        out = img
        for _ in range(4):
            out = apply_d4_image(out, ROT90)
        assert out == img

    def test_fliph_two_by_one(self):
        img = ImageBuffer(np.array([[[0.1], [0.9]]]))  # [a, b]
        flipped = apply_d4_image(img, FLIP_H)
        assert flipped.pixels[0, 0, 0] == 0.9
        assert flipped.pixels[0, 1, 0] == 0.1

    @pytest.mark.parametrize("g", D4_ELEMENTS, ids=lambda g: g.token)
    def test_against_pixel_permutation_oracle(self, g, nprng):
        img = ImageBuffer(nprng.random((5, 7, 3)))
        assert apply_d4_image(img, g) == reference_d4_image(img, g)

    @pytest.mark.parametrize("g", D4_ELEMENTS, ids=lambda g: g.token)
    def test_dimension_swap(self, g):
        img = ImageBuffer(np.zeros((4, 6, 1)))
        out = apply_d4_image(img, g)
        assert (out.width, out.height) == g.output_size(6, 4)

    @pytest.mark.parametrize("g", D4_ELEMENTS, ids=lambda g: g.token)
    def test_intensities_permuted_never_altered(self, g, nprng):
        img = ImageBuffer(nprng.random((4, 6, 1)))
        out = apply_d4_image(img, g)
        assert sorted(out.pixels.ravel()) == sorted(img.pixels.ravel())


class TestD4Box:
    def test_fliph_spec_example(self):
        got = apply_d4_box(BoundingBox(10, 20, 30, 60), FLIP_H, 100, 200)
        assert got == BoundingBox(70, 20, 90, 60)

    def test_identity(self, rng):
        box = random_box(rng)
        assert apply_d4_box(box, IDENTITY, 100, 100) == box

    @pytest.mark.parametrize("g", D4_ELEMENTS, ids=lambda g: g.token)
    def test_inverse_restores_box(self, g, rng):
        w, h = 80, 50
        for _ in range(50):
            box = random_box(rng, w, h)
            moved = apply_d4_box(box, g, w, h)
            wg, hg = g.output_size(w, h)
            assert apply_d4_box(moved, g.inverse(), wg, hg) == box

    @pytest.mark.parametrize("g", D4_ELEMENTS, ids=lambda g: g.token)
    def test_area_preserved(self, g, rng):
        from cellpipe.model import box_area

        for _ in range(50):
            box = random_box(rng, 64, 48)
            moved = apply_d4_box(box, g, 64, 48)
            assert box_area(moved) == pytest.approx(box_area(box), abs=1e-9)

    @pytest.mark.parametrize("g", D4_ELEMENTS, ids=lambda g: g.token)
    def test_commutes_with_rasterization(self, g, rng):
        w, h = 12, 9
        for _ in range(40):
            box = random_box(rng, w, h, integer=True)
            direct = apply_d4_box(box, g, w, h)
            via_mask = mask_bounds(apply_d4_image(rasterize(box, w, h), g))
            assert direct == via_mask


class TestPowerLaw:
    def test_gamma_one_is_identity(self, nprng):
        img = ImageBuffer(nprng.random((6, 6, 3)))
        out = power_law(img, PowerLawParams(gamma=Fraction(1)))
        assert out == img

    def test_spot_value(self):
        img = ImageBuffer(np.array([[[0.25]]]))
        out = power_law(img, PowerLawParams(gamma=Fraction(3, 4)))
        assert abs(out.pixels[0, 0, 0] - 2.0 ** (-1.5)) < 1e-12

    def test_fixed_points(self):
        img = ImageBuffer(np.array([[[0.0], [1.0]]]))
        for gamma in DEFAULT_GAMMAS:
            out = power_law(img, PowerLawParams(gamma=gamma))
            assert out.pixels[0, 0, 0] == 0.0
            assert out.pixels[0, 1, 0] == pytest.approx(1.0, abs=1e-15)

    def test_range_preserved_for_unit_scale(self, nprng):
        img = ImageBuffer(nprng.random((16, 16, 3)))
        for gamma in DEFAULT_GAMMAS:
            out = power_law(img, PowerLawParams(gamma=gamma))
            assert out.pixels.min() >= 0.0
            assert out.pixels.max() <= 1.0

    def test_composition_law(self, nprng):
        img = ImageBuffer(nprng.random((8, 8, 1)))
        g1, g2 = Fraction(3, 4), Fraction(4, 3)
        twice = power_law(power_law(img, PowerLawParams(gamma=g1)), PowerLawParams(gamma=g2))
        once = power_law(img, PowerLawParams(gamma=g1 * g2))
        assert np.max(np.abs(twice.pixels - once.pixels)) < 1e-12

    def test_monotone_in_intensity(self):
        ramp = ImageBuffer(np.linspace(0, 1, 64).reshape(1, 64, 1))
        for gamma in DEFAULT_GAMMAS:
            out = power_law(ramp, PowerLawParams(gamma=gamma)).pixels.ravel()
            assert np.all(np.diff(out) >= 0)

    def test_scale_above_one_errors_without_clamp(self):
        img = ImageBuffer(np.array([[[0.5]]]))
        with pytest.raises(ValueError, match="clamp"):
            power_law(img, PowerLawParams(gamma=Fraction(1), c=1.5))
        clamped = power_law(img, PowerLawParams(gamma=Fraction(1), c=1.5), clamp=True)
        assert clamped.pixels.max() <= 1.0

    def test_applied_per_channel(self):
        img = ImageBuffer(np.array([[[0.25, 0.5, 1.0]]]))
        out = power_law(img, PowerLawParams(gamma=Fraction(2)))
        assert out.pixels[0, 0].tolist() == pytest.approx([0.0625, 0.25, 1.0])


class TestGrayscale:
    def test_white_maps_to_one(self):
        img = ImageBuffer(np.ones((2, 2, 3)))
        assert np.allclose(to_grayscale(img).pixels, 1.0)

    def test_pure_red_weight(self):
        img = ImageBuffer(np.array([[[1.0, 0.0, 0.0]]]))
        assert to_grayscale(img).pixels[0, 0, 0] == pytest.approx(0.299)

    def test_idempotent_on_gray(self, nprng):
        img = ImageBuffer(nprng.random((4, 4, 1)))
        assert to_grayscale(img) is img

    def test_single_channel_output(self, nprng):
        img = ImageBuffer(nprng.random((4, 4, 3)))
        assert to_grayscale(img).channels == 1


class TestExpand:
    def test_twelve_image_fold_yields_480(self):
        fold = tiny_dataset(n_images=12, per_image=2)
        augmented = expand(fold)
        assert len(augmented.dataset.images) == 480
        assert len(augmented.variants) == 480

    def test_sixty_images_yield_2400(self):
        fold = tiny_dataset(n_images=60, per_image=1)
        augmented = expand(fold)
        assert len(augmented.dataset.images) == 2400

    def test_identity_schedule_preserves_content(self):
        fold = tiny_dataset(n_images=3, per_image=2)
        augmented = expand(
            fold,
            d4_schedule=(IDENTITY,),
            power_schedule=(PowerLawParams(gamma=Fraction(1)),),
        )
        assert len(augmented.dataset.images) == 3
        for variant in augmented.variants:
            src_anns = fold.annotations_for(variant.source_image_id)
            new_anns = augmented.dataset.annotations_for(variant.derived_image_id)
            assert [a.box for a in src_anns] == [a.box for a in new_anns]
            assert [a.label for a in src_anns] == [a.label for a in new_anns]

    def test_annotation_counts_and_labels_preserved(self):
        fold = tiny_dataset(n_images=4, per_image=3)
        augmented = expand(fold)
        per_source = {rec.image_id: len(fold.annotations_for(rec.image_id)) for rec in fold.images}
        for variant in augmented.variants:
            derived_anns = augmented.dataset.annotations_for(variant.derived_image_id)
            assert len(derived_anns) == per_source[variant.source_image_id]
            src_labels = [a.label for a in fold.annotations_for(variant.source_image_id)]
            assert [a.label for a in derived_anns] == src_labels

    def test_listing_order_is_source_then_d4_then_gamma(self):
        fold = tiny_dataset(n_images=2, per_image=1)
        augmented = expand(fold)
        keys = [
            (v.source_image_id, v.d4.index, float(v.params.gamma))
            for v in augmented.variants
        ]
        assert keys == sorted(keys)

    def test_empty_fold_rejected(self):
        from cellpipe.model import Dataset

        with pytest.raises(ValueError):
            expand(Dataset(images=(), annotations=()))

    def test_derived_id_pattern(self):
        params = PowerLawParams(gamma=Fraction(3, 4))
        assert derived_image_id("img.png", ROT90, params) == "img.png__rot90__g3x4"

    def test_transform_pixels_matches_manual_composition(self, nprng):
        img = ImageBuffer(nprng.random((6, 4, 3)))
        params = PowerLawParams(gamma=Fraction(5, 4))
        variant = AugmentationVariant(
            source_image_id="x",
            d4=ROT90,
            params=params,
            derived_image_id=derived_image_id("x", ROT90, params),
        )
        manual = power_law(apply_d4_image(img, ROT90), params)
        assert transform_pixels(img, variant) == manual

    def test_default_schedule_is_eight_by_five(self):
        assert len(D4_ELEMENTS) == 8
        assert len(default_power_law_schedule()) == 5
