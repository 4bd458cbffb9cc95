import json

import pytest

from cctext.config import EvalConfig, MergeConfig, PipelineConfig, load_config
from cctext.errors import DataError


def test_defaults_roundtrip_through_json(tmp_path):
    cfg = PipelineConfig()
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    assert load_config(p) == cfg
    assert load_config(None) == cfg


def test_partial_documents_fill_in_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"edges": {"noise_sigma": 0.05}, "merge": {"enabled": True}}))
    cfg = load_config(p)
    assert cfg.edges.noise_sigma == 0.05 and cfg.edges.directions == 12
    assert cfg.merge == MergeConfig(True, 1.5)
    p.write_text(cfg.to_json())
    assert load_config(p) == cfg


@pytest.mark.parametrize("doc", [
    {"colour": "red"},
    {"edges": {"sigma": 1.0}},
    {"edges": {"noise_sigma": -1.0}},
    {"edges": {"directions": 7}},
    {"prune": {"overlap_containment": 2.0}},
    {"merge": {"enabled": "yes"}},
    {"workers": 0},
    {"svm": {"c_grid": 3}},
    {"evaluation": {"match_scale": 0}},
    [],
])
def test_invalid_documents_are_rejected(doc):
    with pytest.raises(DataError):
        PipelineConfig.from_dict(doc)


def test_unreadable_config(tmp_path):
    (tmp_path / "c.json").write_text("{")
    with pytest.raises(DataError):
        load_config(tmp_path / "c.json")
    with pytest.raises(DataError):
        load_config(tmp_path / "nope.json")


def test_replace_swaps_sections():
    cfg = PipelineConfig().replace(evaluation=EvalConfig(1.0), workers=3)
    assert cfg.evaluation.match_scale == 1.0 and cfg.workers == 3
    assert PipelineConfig().evaluation.match_scale == 2.0
