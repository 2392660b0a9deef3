from __future__ import annotations

import json
from dataclasses import replace

import numpy as np
import pytest

from errors import ConfigError, GeometryError
from hsdc.manifest import MANIFEST_NAME, read_manifest
from synthgen.dataset import DATASET_SPEC_NAME, cube_rng, generate_dataset
from synthgen.render import render_seed, render_seed_with_mask
from synthgen.specs import (
    BENCHMARK_KINDS,
    FULL_DIMS,
    Bump,
    ClassSpec,
    DatasetSpec,
    benchmark_spec,
)


def _plain_class(**overrides) -> ClassSpec:
    values = {
        "name": "plain",
        "semi_major_px": (12.0, 14.0),
        "semi_minor_px": (4.0, 5.0),
        "signature": (Bump(1200.0, 80.0, 0.3),),
    }
    values.update(overrides)
    return ClassSpec(**values)


def _wavelengths(bands: int = 24) -> np.ndarray:
    return 950.0 + 600.0 / (bands - 1) * np.arange(bands)


def _tiny_spec(cubes_per_class: int = 3) -> DatasetSpec:
    return DatasetSpec(
        classes=(_plain_class(name="a"), _plain_class(name="b", signature=(Bump(1400.0, 80.0, 0.3),))),
        cubes_per_class=cubes_per_class,
    )


def test_noiseless_render_is_exact_inside_and_outside() -> None:
    spec = _plain_class()
    wavelengths = _wavelengths()

    cube, inside = render_seed_with_mask(spec, (16, 48, 24), wavelengths, 0.02, 0.0, np.random.default_rng(0))

    expected = spec.signature_at(wavelengths).astype(np.float32).astype(np.float64)
    assert inside.any() and not inside.all()
    assert np.array_equal(cube.values[inside], np.broadcast_to(expected, (int(inside.sum()), 24)))
    assert np.all(cube.values[~inside] == np.float64(np.float32(0.02)))


def test_noisy_render_mean_spectrum_tracks_signature() -> None:
    spec = _plain_class()
    wavelengths = _wavelengths()

    cube, inside = render_seed_with_mask(spec, (16, 48, 24), wavelengths, 0.02, 0.01, np.random.default_rng(5))

    n_inside = int(inside.sum())
    mean = cube.values[inside].mean(axis=0)
    # The float32 rounding of each voxel is far below this bound.
    assert np.all(np.abs(mean - spec.signature_at(wavelengths)) <= 4 * 0.01 / np.sqrt(n_inside) + 1e-6)


def test_render_rejects_seed_that_does_not_fit() -> None:
    spec = _plain_class(semi_major_px=(90.0, 100.0))

    with pytest.raises(GeometryError, match="column extent"):
        render_seed(spec, (50, 170, 110), _wavelengths(110), 0.02, 0.01, np.random.default_rng(0))


def test_rotation_needs_room_along_both_axes() -> None:
    spec = _plain_class()

    with pytest.raises(GeometryError, match="row extent"):
        render_seed(spec, (16, 48, 24), _wavelengths(), 0.02, 0.0, np.random.default_rng(0), allow_rotation=True)


def test_class_spec_rejects_out_of_range_signature() -> None:
    spec = _plain_class(signature=(Bump(1200.0, 80.0, 1.4),))

    with pytest.raises(ConfigError, match=r"\[0, 1.5\]"):
        spec.validate(_wavelengths())


def test_generate_dataset_counts_and_balance(tmp_path) -> None:
    spec = DatasetSpec(
        classes=tuple(_plain_class(name=f"c{k}", signature=(Bump(1000.0 + 100 * k, 80.0, 0.3),)) for k in range(4)),
        cubes_per_class=20,
    )

    manifest = generate_dataset(spec, seed=11, out_dir=tmp_path)

    assert len(manifest) == 80
    assert np.bincount(manifest.labels).tolist() == [20, 20, 20, 20]
    assert read_manifest(tmp_path / MANIFEST_NAME).entries == manifest.entries
    meta = json.loads((tmp_path / DATASET_SPEC_NAME).read_text(encoding="utf-8"))
    assert meta["seed"] == 11


def test_generate_dataset_is_byte_identical_per_seed(tmp_path) -> None:
    first = generate_dataset(_tiny_spec(), seed=7, out_dir=tmp_path / "one")
    second = generate_dataset(_tiny_spec(), seed=7, out_dir=tmp_path / "two", workers=3)
    third = generate_dataset(_tiny_spec(), seed=8, out_dir=tmp_path / "three")

    same = [
        first.resolve(a).read_bytes() == second.resolve(b).read_bytes()
        for a, b in zip(first.entries, second.entries)
    ]
    differ = [
        first.resolve(a).read_bytes() != third.resolve(b).read_bytes()
        for a, b in zip(first.entries, third.entries)
    ]
    assert all(same)
    assert any(differ)
    assert (tmp_path / "one" / MANIFEST_NAME).read_bytes() == (tmp_path / "two" / MANIFEST_NAME).read_bytes()


def test_cube_streams_do_not_depend_on_order() -> None:
    a = cube_rng(3, 1, 2).random(4)
    cube_rng(3, 0, 0).random(100)
    b = cube_rng(3, 1, 2).random(4)

    assert np.array_equal(a, b)
    assert not np.array_equal(a, cube_rng(3, 2, 1).random(4))


def test_spectral_only_shares_shapes_and_separates_signatures() -> None:
    spec = benchmark_spec("spectral-only")
    wavelengths = spec.wavelengths()

    assert len({(c.semi_major_px, c.semi_minor_px) for c in spec.classes}) == 1
    signatures = [c.signature_at(wavelengths) for c in spec.classes]
    for i in range(len(signatures)):
        for j in range(i + 1, len(signatures)):
            assert np.linalg.norm(signatures[i] - signatures[j]) > 0.1


def test_spatial_only_shares_signatures() -> None:
    spec = benchmark_spec("spatial-only")

    assert len({c.signature for c in spec.classes}) == 1
    assert len({(c.semi_major_px, c.semi_minor_px) for c in spec.classes}) == 4


def test_benchmark_kinds_validate_and_fit_geometry() -> None:
    for kind in BENCHMARK_KINDS:
        spec = benchmark_spec(kind, cubes_per_class=2)
        spec.validate()
        for class_spec in spec.classes:
            render_seed(class_spec, spec.cube_dims, spec.wavelengths(), spec.background_level, 0.0, np.random.default_rng(0))

    assert len(benchmark_spec("mixed-4class").classes) == 4
    assert len(benchmark_spec("easy-6class").classes) == 6
    assert benchmark_spec("mixed-4class").cube_dims == (16, 48, 24)


def test_full_size_benchmark_dims() -> None:
    spec = benchmark_spec("mixed-4class", size="full")

    assert spec.cube_dims == FULL_DIMS == (50, 170, 110)
    assert spec.wavelengths()[-1] == pytest.approx(1550.0)


def test_unknown_benchmark_kind_names_the_value() -> None:
    with pytest.raises(ConfigError, match="'bogus'"):
        benchmark_spec("bogus")


def test_dataset_spec_dict_round_trip_rejects_unknown_keys() -> None:
    spec = replace(_tiny_spec(), allow_rotation=False)
    data = json.loads(json.dumps(spec.to_dict()))

    assert DatasetSpec.from_dict(data) == spec
    with pytest.raises(ConfigError, match="unknown dataset keys: colour"):
        DatasetSpec.from_dict({**data, "colour": 1})
