from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from errors import DataError
from hsdc.cube import Datacube
from hsdc.fileformat import load_datacube

MANIFEST_NAME = "manifest.tsv"


@dataclass(frozen=True)
class ManifestEntry:
    cube_path: str
    label: int
    class_name: str


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    root: Path = Path(".")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> list[int]:
        return [entry.label for entry in self.entries]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def class_names(self) -> list[str]:
        names: dict[int, str] = {}
        for entry in self.entries:
            names.setdefault(entry.label, entry.class_name)
        return [names[label] for label in sorted(names)]

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.cube_path

    def load_cubes(self, indices: list[int] | None = None) -> list[Datacube]:
        chosen = range(len(self.entries)) if indices is None else indices
        return [load_datacube(self.resolve(self.entries[i])) for i in chosen]

    def validate(self) -> None:
        labels = sorted({entry.label for entry in self.entries})
        if labels != list(range(len(labels))):
            raise DataError(f"manifest labels must be contiguous from 0 (got {labels})")
        names: dict[int, str] = {}
        for entry in self.entries:
            known = names.setdefault(entry.label, entry.class_name)
            if known != entry.class_name:
                raise DataError(
                    f"label {entry.label} has two class names: '{known}' and '{entry.class_name}'"
                )
        for entry in self.entries:
            if not self.resolve(entry).exists():
                raise DataError(f"manifest entry not found: {self.resolve(entry)}")


def write_manifest(manifest: Manifest, destination: Path | str) -> None:
    lines = []
    for entry in manifest.entries:
        if "\t" in entry.cube_path or "\t" in entry.class_name:
            raise DataError(f"manifest fields must not contain tabs: {entry}")
        lines.append(f"{entry.cube_path}\t{entry.label}\t{entry.class_name}\n")
    Path(destination).write_text("".join(lines), encoding="utf-8")


def read_manifest(source: Path | str) -> Manifest:
    path = Path(source)
    if path.is_dir():
        path = path / MANIFEST_NAME
    entries: list[ManifestEntry] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields")
        try:
            label = int(parts[1])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: label must be an integer (got '{parts[1]}')") from exc
        entries.append(ManifestEntry(cube_path=parts[0], label=label, class_name=parts[2]))
    manifest = Manifest(entries=entries, root=path.parent)
    manifest.validate()
    return manifest
