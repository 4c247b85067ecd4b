import json

import numpy as np
import pytest

from diffsteg.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from diffsteg.network import TinyDenoiser
from diffsteg.pnm import read_pnm
from diffsteg.schedule import build_linear_schedule


@pytest.fixture
def secret(tmp_path):
    path = tmp_path / "secret.bin"
    path.write_bytes(bytes(np.random.default_rng(0).integers(0, 256, 32, dtype=np.uint8)))
    return path


@pytest.fixture
def tiny_ckpt(tmp_path):
    path = tmp_path / "tiny.gsdw"
    TinyDenoiser((1, 16, 16), build_linear_schedule(1000), hidden_dim=16, seed=0).save(path)
    return path


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("GSD_SEED", raising=False)


def run(*argv):
    return main([str(a) for a in argv])


# -- usage errors -----------------------------------------------------------------


def test_no_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_train_zero_steps(tmp_path, capsys):
    assert run("train", "--steps", 0, "--out", tmp_path / "m.gsdw") == EXIT_USAGE
    assert "steps" in capsys.readouterr().err


def test_hide_needs_model(tmp_path, secret):
    assert run("hide", "--secret", secret, "--out", tmp_path / "s.pgm") == EXIT_USAGE


def test_hide_S_not_dividing_T(tmp_path, secret):
    assert run("hide", "--oracle", "zero", "--S", 3, "--secret", secret, "--out", tmp_path / "s.pgm") == EXIT_USAGE


def test_bad_oracle(tmp_path, secret):
    assert run("hide", "--oracle", "linear", "--secret", secret, "--out", tmp_path / "s.pgm") == EXIT_USAGE


# -- hide ----------------------------------------------------------------------


def test_hide_writes_pgm(tmp_path, secret):
    out = tmp_path / "s.pgm"
    assert run("hide", "--oracle", "constant:0.5", "--S", 10, "--secret", secret, "--out", out) == EXIT_OK
    assert out.read_bytes().startswith(b"P5\n16 16\n255\n")
    assert read_pnm(out).shape == (1, 16, 16)


def test_hide_short_secret(tmp_path, capsys):
    short = tmp_path / "short.bin"
    short.write_bytes(b"x" * 31)
    assert run("hide", "--oracle", "zero", "--secret", short, "--out", tmp_path / "s.pgm") == EXIT_DATA
    assert "requires 32 bytes" in capsys.readouterr().err


def test_hide_byte_identical_reruns(tmp_path, secret, tiny_ckpt):
    outs = [tmp_path / "a.pgm", tmp_path / "b.pgm"]
    for out in outs:
        assert run("hide", "--checkpoint", tiny_ckpt, "--S", 10, "--secret", secret, "--out", out) == EXIT_OK
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_hide_color_writes_ppm(tmp_path):
    sec = tmp_path / "big.bin"
    sec.write_bytes(bytes(range(256)) * 3)
    out = tmp_path / "s.ppm"
    assert run("hide", "--oracle", "zero", "--dims", "3x16x16", "--secret", sec, "--out", out) == EXIT_OK
    assert out.read_bytes().startswith(b"P6\n")


def test_hide_cover(tmp_path):
    out = tmp_path / "c.pgm"
    assert run("hide", "--oracle", "zero", "--cover", "--out", out) == EXIT_OK
    assert out.exists()


def test_manifest_contents(tmp_path, secret, tiny_ckpt):
    out = tmp_path / "s.pgm"
    assert run("hide", "--checkpoint", tiny_ckpt, "--S", 20, "--seed", 4, "--secret", secret, "--out", out) == EXIT_OK
    m = json.loads((tmp_path / "s.pgm.manifest.json").read_text())
    assert m["command"] == "hide"
    assert m["seed"] == 4
    assert m["config"]["S"] == 20 and m["config"]["T"] == 1000
    assert m["secret_bit_order"] == "msb-first"
    assert len(m["checkpoint_sha256"]) == 64


# -- reveal ---------------------------------------------------------------------


def test_exact_round_trip_no_quantize(tmp_path, secret):
    stego = tmp_path / "s.npy"
    rec = tmp_path / "rec.bin"
    common = ("--oracle", "constant:0.5", "--S", 10)
    assert run("hide", *common, "--no-quantize", "--secret", secret, "--out", stego) == EXIT_OK
    assert run("reveal", *common, "--image", stego, "--out", rec) == EXIT_OK
    assert rec.read_bytes() == secret.read_bytes()


def test_reveal_dims_mismatch(tmp_path, secret, tiny_ckpt, capsys):
    stego = tmp_path / "s.pgm"
    assert run("hide", "--oracle", "zero", "--dims", "1x8x8", "--secret", secret, "--out", stego) == EXIT_OK
    assert run("reveal", "--checkpoint", tiny_ckpt, "--image", stego, "--out", tmp_path / "r.bin") == EXIT_DATA
    assert "do not match" in capsys.readouterr().err


def test_explicit_dims_must_match_checkpoint(tmp_path, secret, tiny_ckpt):
    code = run("hide", "--checkpoint", tiny_ckpt, "--dims", "1x8x8", "--secret", secret, "--out", tmp_path / "s.pgm")
    assert code == EXIT_DATA


def test_reveal_garbage_image(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"not an image")
    assert run("reveal", "--oracle", "zero", "--image", bad, "--out", tmp_path / "r.bin") == EXIT_DATA


def test_corrupt_checkpoint(tmp_path, secret):
    ck = tmp_path / "bad.gsdw"
    ck.write_bytes(b"GSDW\x01")
    assert run("hide", "--checkpoint", ck, "--secret", secret, "--out", tmp_path / "s.pgm") == EXIT_DATA


# -- config precedence -------------------------------------------------------------


def _manifest_seed(path):
    return json.loads((path.parent / (path.name + ".manifest.json")).read_text())["seed"]


def test_env_seed_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GSD_SEED", "17")
    out = tmp_path / "c.pgm"
    assert run("hide", "--oracle", "zero", "--cover", "--out", out) == EXIT_OK
    assert _manifest_seed(out) == 17
    assert run("hide", "--oracle", "zero", "--cover", "--seed", 3, "--out", out) == EXIT_OK
    assert _manifest_seed(out) == 3


def test_bad_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("GSD_SEED", "abc")
    assert run("hide", "--oracle", "zero", "--cover", "--out", tmp_path / "c.pgm") == EXIT_USAGE


def test_flags_override_config(tmp_path, monkeypatch):
    monkeypatch.setenv("GSD_SEED", "17")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 8, "S": 20, "oracle": "zero"}))
    out = tmp_path / "c.pgm"
    assert run("hide", "--config", cfg, "--cover", "--out", out) == EXIT_OK
    m = json.loads((tmp_path / "c.pgm.manifest.json").read_text())
    assert m["seed"] == 8 and m["config"]["S"] == 20
    assert run("hide", "--config", cfg, "--cover", "--S", 50, "--out", out) == EXIT_OK
    assert json.loads((tmp_path / "c.pgm.manifest.json").read_text())["config"]["S"] == 50


def test_unreadable_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2")
    assert run("hide", "--config", cfg, "--oracle", "zero", "--cover") == EXIT_USAGE


# -- schedule / sweep / trajectory --------------------------------------------------


def test_schedule_dump(tmp_path, capsys):
    out = tmp_path / "sched.csv"
    assert run("schedule", "dump", "--T", 1000, "--out", out) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "t,alpha,alpha_bar"
    assert len(lines) == 1001
    assert float(lines[1].split(",")[1]) == pytest.approx(0.99998)
    assert run("schedule", "dump", "--T", 4) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 5


def test_sweep_three_rows(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--oracle", "constant:0.5", "--S-list", "10,50,100", "--trials", 2, "--out", out) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert [int(line.split(",")[0]) for line in lines[1:]] == [10, 50, 100]


def test_sweep_rejects_bad_S(tmp_path):
    assert run("sweep", "--oracle", "zero", "--S-list", "10,7", "--trials", 1, "--out", tmp_path / "s.csv") == EXIT_USAGE


def test_trajectory_generate_file_count(tmp_path, secret):
    out = tmp_path / "traj"
    assert run("trajectory", "--oracle", "zero", "--S", 10, "--secret", secret, "--out", out) == EXIT_OK
    files = sorted(out.glob("*.pgm"))
    assert len(files) == 11
    assert files[0].name == "step_0000.pgm" and files[-1].name == "step_1000.pgm"


def test_trajectory_invert(tmp_path, secret):
    stego = tmp_path / "s.pgm"
    assert run("hide", "--oracle", "zero", "--S", 5, "--secret", secret, "--out", stego) == EXIT_OK
    out = tmp_path / "traj"
    assert run("trajectory", "--oracle", "zero", "--S", 5, "--direction", "invert", "--image", stego, "--out", out) == 0
    assert len(list(out.glob("*.pgm"))) == 6


def test_trajectory_stochastic_generate(tmp_path):
    out = tmp_path / "traj"
    assert run("trajectory", "--oracle", "constant:0.1", "--S", 10, "--eta", 1.0, "--out", out) == EXIT_OK
    assert len(list(out.glob("*.pgm"))) == 11


def test_hide_rejects_eta(tmp_path, secret):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eta": 0.5}))
    assert run("hide", "--config", cfg, "--oracle", "zero", "--secret", secret, "--out", tmp_path / "s.pgm") == EXIT_USAGE


# -- train ---------------------------------------------------------------------


def test_train_deterministic(tmp_path):
    outs = [tmp_path / "a.gsdw", tmp_path / "b.gsdw"]
    for out in outs:
        code = run("train", "--dims", "1x4x4", "--steps", 30, "--batch", 4, "--count", 10, "--seed", 2, "--out", out)
        assert code == EXIT_OK
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert not (tmp_path / "a.gsdw.partial").exists()
    csv_lines = (tmp_path / "a.gsdw.loss.csv").read_text().splitlines()
    assert csv_lines[0] == "step,loss"
    assert csv_lines[1].startswith("1,")
    m = json.loads((tmp_path / "a.gsdw.manifest.json").read_text())
    assert m["command"] == "train" and m["config"]["steps"] == 30


@pytest.mark.slow
def test_reveal_trained_model_and_mismatch_warning(toy_model, tmp_path, secret, capsys):
    ckpt = tmp_path / "toy.gsdw"
    toy_model.save(ckpt)
    stego = tmp_path / "s.pgm"
    rec = tmp_path / "rec.bin"
    assert run("hide", "--checkpoint", ckpt, "--S", 10, "--secret", secret, "--out", stego) == EXIT_OK
    assert run("reveal", "--checkpoint", ckpt, "--S", 10, "--image", stego, "--out", rec) == EXIT_OK
    assert "warning" not in capsys.readouterr().err
    got = np.unpackbits(np.frombuffer(rec.read_bytes(), np.uint8))
    want = np.unpackbits(np.frombuffer(secret.read_bytes(), np.uint8))
    assert np.mean(got == want) >= 0.95
    # revealing with the wrong predictor is flagged
    assert run("reveal", "--oracle", "zero", "--S", 10, "--image", stego, "--out", rec) == EXIT_OK
    assert "probable S/checkpoint mismatch" in capsys.readouterr().err
