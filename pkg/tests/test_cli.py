import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ftnest import mlp
from ftnest.cli import main, model_path
from ftnest.dataset import gen_dataset, write_dataset
from ftnest.dsp import downsample, read_stream, srrc_taps
from ftnest.metrics import ConfusionTable

REFERENCE = Path(__file__).parent / "data" / "reference_confusion_4db.tsv"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def models_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    for ak in (1.0, 0.8):
        ds = gen_dataset(ak, [1.0, 0.8, 0.6], 4.0, 2000, seed=1)
        m = mlp.init((20, 8, 1), seed=2)
        m, _ = mlp.train(m, ds.features, ds.labels, mlp.TrainConfig(epochs=1))
        mlp.save_model(m, model_path(d, ak))
    return d


def test_pacc_and_m99(capsys):
    assert run(capsys, "pacc", "--p1", 1, "--p2", 0, "--M", 5)[1].strip() == "1.0"
    assert float(run(capsys, "pacc", "--p1", 0.3, "--p2", 0.6, "--M", 1)[1]) == pytest.approx(0.12, abs=1e-15)
    assert run(capsys, "m99", "--p1", 1, "--p2", 0)[1].strip() == "1"
    code, out, err = run(capsys, "m99", "--p1", 0.5, "--p2", 0.5)
    assert code == 1 and out == "" and err.startswith("ftnest: ")


def test_m99_pool_reference_table(capsys):
    code, out, _ = run(capsys, "m99-pool", "--table", REFERENCE, "--pool", "1,0.9,0.8,0.75,0.6")
    assert code == 0
    rows = dict(line.split("\t") for line in out.strip().splitlines()[1:])
    assert abs(int(rows["pool_max"]) - 22) <= 3
    assert len(rows) == 6


def test_simulate_noiseless_alpha_1(capsys, tmp_path):
    out = tmp_path / "s.ftns"
    code, _, _ = run(capsys, "simulate", "--alpha", 1, "--ebn0", "inf", "--symbols", 200, "--seed", 3, "--out", out)
    assert code == 0
    s = read_stream(out)
    y = downsample(s, 20, 0, 200)
    assert np.max(np.abs(np.abs(y) - 1)) < 1e-3


def test_simulate_length_alpha_075(capsys, tmp_path):
    out = tmp_path / "s.ftns"
    run(capsys, "simulate", "--alpha", 0.75, "--symbols", 1000, "--seed", 1, "--out", out)
    taps = len(srrc_taps().taps)
    assert read_stream(out).data.size == 999 * 15 + 1 + 2 * (taps - 1)


def test_simulate_is_seed_deterministic(capsys, tmp_path):
    for name, seed in [("a", 5), ("b", 5), ("c", 6)]:
        run(capsys, "simulate", "--alpha", 0.8, "--symbols", 300, "--seed", seed, "--out", tmp_path / name)
    a, b, c = ((tmp_path / n).read_bytes() for n in "abc")
    assert a == b and a != c


def test_simulate_grid_violation_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--alpha", 0.73, "--seed", 0, "--out", tmp_path / "x")
    assert code == 2 and "0.73" in err
    assert not (tmp_path / "x").exists()


def test_missing_seed_is_reported(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--alpha", 1, "--symbols", 10, "--out", tmp_path / "s")
    assert code == 0
    seed = int(err.split("seed\t")[1].split()[0])
    run(capsys, "simulate", "--alpha", 1, "--symbols", 10, "--seed", seed, "--out", tmp_path / "t")
    assert (tmp_path / "s").read_bytes() == (tmp_path / "t").read_bytes()


def test_gen_data_matches_library(capsys, tmp_path):
    out = tmp_path / "d.ftnd"
    code, text, _ = run(capsys, "gen-data", "--alpha-k", 0.8, "--pool", "1,0.8,0.6", "--ebn0", 4,
                        "--groups", 400, "--seed", 9, "--out", out)
    assert code == 0 and "positives\t200" in text
    write_dataset(gen_dataset(0.8, [1.0, 0.8, 0.6], 4.0, 400, 9), tmp_path / "ref")
    assert out.read_bytes() == (tmp_path / "ref").read_bytes()
    # space-separated pool is accepted too
    run(capsys, "gen-data", "--alpha-k", 0.8, "--pool", 1, 0.8, 0.6, "--groups", 400, "--seed", 9,
        "--out", tmp_path / "e")
    assert (tmp_path / "e").read_bytes() == out.read_bytes()


def test_gen_data_bad_count_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, "gen-data", "--alpha-k", 0.8, "--pool", "1,0.8", "--groups", 5, "--seed", 0,
                     "--out", tmp_path / "d")
    assert code == 2


def test_train_writes_model_and_log(capsys, tmp_path):
    data = tmp_path / "d.ftnd"
    write_dataset(gen_dataset(1.0, [1.0, 0.6], 4.0, 500, 1), data)
    out = tmp_path / "m.ftnw"
    code, log, _ = run(capsys, "train", "--data", data, "--dims", "20,8,1", "--epochs", 3, "--seed", 1,
                       "--out", out)
    assert code == 0
    lines = log.strip().splitlines()
    assert lines[0] == "epoch\tloss\tseconds" and len(lines) == 4
    assert [ln.split("\t")[0] for ln in lines[1:]] == ["1", "2", "3"]
    assert mlp.load_model(out).dims == (20, 8, 1)


def test_train_rejects_corrupt_data_exit_3(capsys, tmp_path):
    (tmp_path / "d").write_bytes(b"junk" * 40)
    code, _, err = run(capsys, "train", "--data", tmp_path / "d", "--seed", 0, "--out", tmp_path / "m")
    assert code == 3 and "magic" in err


def test_eval_and_thread_independence(capsys, models_dir, monkeypatch):
    args = ["eval", "--models-dir", models_dir, "--pool", "1,0.8,0.6", "--ebn0", 4, "--groups", 40, "--seed", 2]
    code, out, _ = run(capsys, *args)
    assert code == 0
    table = ConfusionTable.from_tsv(out)
    assert table.alphas == (1.0, 0.8, 0.6) and table.alpha_ks == (1.0, 0.8)
    assert np.all((table.p_true >= 0) & (table.p_true <= 1))
    monkeypatch.setenv("FTN_THREADS", "3")
    assert run(capsys, *args)[1] == out


def test_sweep_matches_eval(capsys, models_dir):
    code, out, _ = run(capsys, "sweep", "--models-dir", models_dir, "--pool", "1,0.8,0.6",
                       "--ebn0-list", "2,4", "--groups", 40, "--seed", 2)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "ebn0_db\talpha\talpha_k\tp_true" and len(lines) == 1 + 2 * 3 * 2
    _, ref, _ = run(capsys, "eval", "--models-dir", models_dir, "--pool", "1,0.8,0.6", "--ebn0", 4,
                    "--groups", 40, "--seed", 2)
    table = ConfusionTable.from_tsv(ref)
    for line in lines[1:]:
        e, a, ak, p = map(float, line.split("\t"))
        if e == 4.0:
            assert table.cell(a, ak) == p


def test_estimate_output(capsys, models_dir, tmp_path):
    stream = tmp_path / "s.ftns"
    run(capsys, "simulate", "--alpha", 0.8, "--symbols", 1500, "--seed", 4, "--out", stream)
    code, out, _ = run(capsys, "estimate", "--in", stream, "--models-dir", models_dir, "--pool", "1,0.8",
                       "--M", 20)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("chosen_alpha\t") and float(lines[0].split("\t")[1]) in (1.0, 0.8)
    assert lines[1] in ("tie\t0", "tie\t1")
    assert lines[2] == "alpha_k\tmax_count\tbest_branch"
    assert [float(ln.split("\t")[0]) for ln in lines[3:]] == [1.0, 0.8]


def test_estimate_errors(capsys, models_dir, tmp_path):
    stream = tmp_path / "s.ftns"
    run(capsys, "simulate", "--alpha", 0.8, "--symbols", 100, "--seed", 4, "--out", stream)
    code, _, err = run(capsys, "estimate", "--in", stream, "--models-dir", models_dir, "--M", 60)
    assert code == 1 and "at least" in err
    code, _, _ = run(capsys, "estimate", "--in", stream, "--models-dir", tmp_path / "nowhere", "--M", 1)
    assert code == 2
    raw = bytearray(stream.read_bytes())
    raw[4] = 9
    (tmp_path / "bad").write_bytes(raw)
    code, _, _ = run(capsys, "estimate", "--in", tmp_path / "bad", "--models-dir", models_dir, "--M", 1)
    assert code == 3


def test_config_file_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# analytic check\np1 = 0.7\np2 = 0.2\ntarget = 0.9\n")
    _, base, _ = run(capsys, "m99", "--config", cfg)
    _, flag, _ = run(capsys, "m99", "--config", cfg, "--target", 0.99)
    assert int(base) < int(flag)
    assert int(flag) == int(run(capsys, "m99", "--p1", 0.7, "--p2", 0.2)[1])
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "m99", "--config", cfg, "--p1", 1, "--p2", 0)[0] == 2


def test_config_file_for_lists(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"table = {REFERENCE}\npool = 1, 0.9, 0.8, 0.75, 0.6\n")
    code, out, _ = run(capsys, "m99-pool", "--config", cfg)
    assert code == 0 and "pool_max\t21" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ftnest", "pacc", "--p1", "1", "--p2", "0", "--M", "3"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "1.0"
