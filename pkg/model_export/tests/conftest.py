import json

import pytest

from model_export.export import train_and_export
from model_export.shapes import generate_dataset

EPOCHS = 40
SEED = 0


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """One shared training run: shapes dataset + exported artifacts."""
    root = tmp_path_factory.mktemp("export")
    dataset = root / "shapes"
    records = generate_dataset(dataset, per_class=120, seed=SEED)
    (dataset / "bboxes.json").write_text(json.dumps(records) + "\n")
    manifest = train_and_export(dataset, root / "artifacts", epochs=EPOCHS, seed=SEED)
    return {
        "dataset": dataset,
        "out": root / "artifacts",
        "manifest": manifest,
    }
