import pytest

from cellpipe.augment import expand
from cellpipe.crossval import partition
from cellpipe.manifest import read_manifest, write_manifest
from cellpipe.model import FormatError, merge_datasets

from conftest import tiny_dataset


def same_content(a, b):
    """Dataset equality up to row order (manifests canonicalize ordering)."""
    key = lambda ann: (ann.image_id, ann.box.as_tuple(), ann.label.token)
    return set(a.images) == set(b.images) and sorted(a.annotations, key=key) == sorted(
        b.annotations, key=key
    )


def test_roundtrip_dataset_only():
    d = tiny_dataset(n_images=4, per_image=2)
    m = read_manifest(write_manifest(d))
    assert same_content(m.dataset, d)
    assert m.folds is None
    assert m.variants == ()


def test_roundtrip_is_write_stable():
    d = tiny_dataset(n_images=4, per_image=2)
    text = write_manifest(d)
    assert write_manifest(read_manifest(text).dataset) == text


def test_roundtrip_with_folds_and_variants():
    d = tiny_dataset(n_images=6, per_image=1)
    folds = partition(d, 3, seed=5)
    augmented = expand(d)
    combined = merge_datasets([d, augmented.dataset])
    text = write_manifest(combined, folds=folds, variants=augmented.variants)
    m = read_manifest(text)
    assert same_content(m.dataset, combined)
    assert m.folds == folds
    assert set(m.variants) == set(augmented.variants)
    assert write_manifest(m.dataset, folds=m.folds, variants=m.variants) == text


def test_write_is_deterministic():
    d = tiny_dataset(n_images=5, per_image=2)
    folds = partition(d, 2, seed=1)
    assert write_manifest(d, folds=folds) == write_manifest(d, folds=folds)


def test_sixty_image_five_fold_manifest_lists_each_image_once():
    d = tiny_dataset(n_images=60, per_image=1)
    folds = partition(d, 5, seed=9)
    m = read_manifest(write_manifest(d, folds=folds))
    assignment = m.folds.as_dict()
    assert sorted(assignment) == sorted(d.image_ids)
    assert set(assignment.values()) == {1, 2, 3, 4, 5}


def test_single_source_full_augmentation_lists_40_variants():
    d = tiny_dataset(n_images=1, per_image=2)
    augmented = expand(d)
    combined = merge_datasets([d, augmented.dataset])
    m = read_manifest(write_manifest(combined, variants=augmented.variants))
    assert len(m.variants) == 40


def test_dangling_fold_reference_rejected():
    d = tiny_dataset(n_images=4, per_image=1)
    folds = partition(d, 2, seed=0)
    smaller = d.subset(list(d.image_ids)[:2])
    with pytest.raises(FormatError, match="unknown image"):
        write_manifest(smaller, folds=folds)


def test_dangling_variant_reference_rejected():
    d = tiny_dataset(n_images=2, per_image=1)
    augmented = expand(d)
    with pytest.raises(FormatError, match="unknown derived"):
        write_manifest(d, variants=augmented.variants)  # derived images absent


def test_variant_inconsistent_with_its_id_rejected():
    d = tiny_dataset(n_images=1, per_image=1)
    augmented = expand(d)
    combined = merge_datasets([d, augmented.dataset])
    text = write_manifest(combined, variants=augmented.variants)
    tampered = text.replace('"d4": "rot90"', '"d4": "rot180"', 1)
    assert tampered != text
    with pytest.raises(FormatError, match="provenance"):
        read_manifest(tampered)


def test_unsupported_version_rejected():
    d = tiny_dataset(n_images=1, per_image=0)
    text = write_manifest(d).replace('"format_version": 1', '"format_version": 99')
    with pytest.raises(FormatError, match="format_version"):
        read_manifest(text)


def test_malformed_json_rejected():
    with pytest.raises(FormatError, match="malformed"):
        read_manifest("{not json")
