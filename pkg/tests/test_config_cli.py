import json

import pytest

from backbay import cli
from backbay.audio import AudioClip, write_wav
from backbay.config import DEFAULTS, PipelineConfig, apply_overrides
from backbay.errors import ConfigError
from backbay.evaluation import read_ppm
from backbay.pipeline import STAGES
from conftest import sine
from small import small


def test_defaults_validate():
    cfg = PipelineConfig.from_dict()
    assert cfg.policy.dirty_label == 9
    assert cfg.schedule.T == 50
    assert cfg.train_config.learning_rate == 0.001
    assert cfg.hidden == (64,)


def test_overrides_parse_json_values():
    raw = apply_overrides(DEFAULTS, {"poison.flip_prob": "0", "train.hidden": "[8, 4]", "eval.model_name": "abc"})
    assert raw["poison"]["flip_prob"] == 0
    assert raw["train"]["hidden"] == [8, 4]
    assert raw["eval"]["model_name"] == "abc"
    assert DEFAULTS["poison"]["flip_prob"] == 0.1


def test_unknown_and_invalid_keys():
    with pytest.raises(ConfigError, match="poison.nope"):
        PipelineConfig.from_dict({"poison": {"nope": 1}})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(overrides={"poison.flip_prob": "1.5"})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"seed": None})
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"train": {"epochs": 40}})


def test_config_hash_ignores_out_dir():
    a = PipelineConfig.from_dict({"out_dir": "x"})
    b = PipelineConfig.from_dict({"out_dir": "y"})
    c = PipelineConfig.from_dict({"seed": 1})
    assert a.config_hash == b.config_hash != c.config_hash
    assert len(a.config_hash) == 16


def test_reference_lr_override():
    assert PipelineConfig.from_dict().with_reference_lr().train_config.learning_rate == 0.1


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        PipelineConfig.load(bad)
    bad.write_text("[1]")
    with pytest.raises(ConfigError):
        PipelineConfig.load(bad)


def test_cli_config_error_exit_code(tmp_path, capsys):
    code = cli.main(["synth-data", "--out", str(tmp_path), "--set", "poison.bogus=1"])
    assert code == STAGES["config"]
    assert "bogus" in capsys.readouterr().err


def test_cli_stage_exit_codes(tmp_path):
    # poison before any dataset exists fails in the poison stage
    assert cli.main(["poison", "--out", str(tmp_path / "none")]) == STAGES["poison"]
    assert cli.main(["ingest", "--corpus", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == STAGES["data"]
    assert cli.main(["ingest", "--out", str(tmp_path / "o")]) == STAGES["config"]


def test_cli_thd_and_spectrogram_on_file(tmp_path, capsys):
    wav = tmp_path / "tone.wav"
    write_wav(AudioClip(sine(500.0, 16000) + 0.5 * sine(1000.0, 16000)), wav)
    assert cli.main(["thd", "--wav", str(wav), "--f0", "500", "--harmonics", "5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["thd"] == pytest.approx(0.5, abs=0.01)
    assert cli.main(["thd", "--wav", str(wav), "--harmonics", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["f0"] == pytest.approx(500.0, abs=1.0)
    img = tmp_path / "t.ppm"
    assert cli.main(["spectrogram", "--wav", str(wav), "--image", str(img)]) == 0
    assert read_ppm(img).shape == (257, 61, 3)


def test_cli_bad_wav_exit_code(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"garbage")
    assert cli.main(["thd", "--wav", str(bad)]) == 1


def test_cli_config_file_and_seed(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(small(tmp_path / "run")))
    assert cli.main(["synth-data", "--config", str(path), "--seed", "5"]) == 0
    saved = json.loads((tmp_path / "run" / "config.json").read_text())
    assert saved["seed"] == 5
    assert saved["dataset"]["clips_per_speaker"] == 10
