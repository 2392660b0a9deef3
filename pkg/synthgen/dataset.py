from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from hsdc.cube import Datacube
from hsdc.fileformat import save_datacube
from hsdc.manifest import MANIFEST_NAME, Manifest, ManifestEntry, write_manifest
from runlog import debug, log
from synthgen.render import check_geometry, render_seed
from synthgen.specs import DatasetSpec

DATASET_SPEC_NAME = "dataset.json"


def cube_rng(seed: int, class_index: int, cube_index: int) -> np.random.Generator:
    # SeedSequence hashes the triple, so each cube's stream is independent of
    # generation order.
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), class_index, cube_index]))


def render_dataset_cube(spec: DatasetSpec, seed: int, class_index: int, cube_index: int) -> Datacube:
    rendered = render_seed(
        spec.classes[class_index],
        spec.cube_dims,
        spec.wavelengths(),
        spec.background_level,
        spec.noise_std,
        cube_rng(seed, class_index, cube_index),
        allow_rotation=spec.allow_rotation,
    )
    return Datacube(rendered.values, spec.wavelength_start_nm, spec.wavelength_step_nm)


def generate_dataset(
    spec: DatasetSpec, seed: int, out_dir: Path | str, workers: int = 1
) -> Manifest:
    spec.validate()
    for class_spec in spec.classes:
        check_geometry(class_spec, spec.cube_dims, spec.allow_rotation)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    jobs = [
        (class_index, cube_index)
        for class_index in range(len(spec.classes))
        for cube_index in range(spec.cubes_per_class)
    ]

    def _write(job: tuple[int, int]) -> ManifestEntry:
        class_index, cube_index = job
        name = spec.classes[class_index].name
        relative = f"{name}/{name}_{cube_index:04d}.hsdc"
        (root / name).mkdir(parents=True, exist_ok=True)
        save_datacube(render_dataset_cube(spec, seed, class_index, cube_index), root / relative)
        debug("synth", "cube written", path=relative)
        return ManifestEntry(cube_path=relative, label=class_index, class_name=name)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_write, jobs))
    else:
        entries = [_write(job) for job in jobs]

    manifest = Manifest(entries=entries, root=root)
    write_manifest(manifest, root / MANIFEST_NAME)
    (root / DATASET_SPEC_NAME).write_text(
        json.dumps({"seed": int(seed), "spec": spec.to_dict()}, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    log(
        "synth",
        "dataset written",
        cubes=len(entries),
        classes=len(spec.classes),
        dims="x".join(str(d) for d in spec.cube_dims),
        out=str(root),
    )
    return manifest
