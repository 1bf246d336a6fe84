import subprocess
import sys

import numpy as np
import pytest

from dsctrl import bench
from dsctrl.cli import main
from dsctrl.frames import read_index
from dsctrl.modelfile import read_model, write_model
from dsctrl.lti import StateSpaceModel


@pytest.fixture
def gen_dir(tmp_path):
    assert main(["gen", "--count", "3", "--n", "3", "--seed", "5", "--out", str(tmp_path)]) == 0
    return tmp_path


def test_gen_writes_models_with_certificate(gen_dir):
    files = sorted(gen_dir.glob("*.txt"))
    assert [f.name for f in files] == [f"gen5_{i:04d}.txt" for i in range(3)]
    text = files[0].read_text()
    assert "# certificate K0" in text
    model = read_model(files[0])
    cert = text.split("):", 1)[1].splitlines()[0].split()
    k0 = np.array([float(v) for v in cert]).reshape(model.m, model.p)
    assert np.max(np.linalg.eigvals(model.a + model.b @ k0 @ model.c).real) < 0


@pytest.mark.parametrize("cmd", ["stabilize", "h2", "hinf"])
def test_sof_commands(cmd, gen_dir, tmp_path, capsys):
    model = str(sorted(gen_dir.glob("*.txt"))[0])
    out = tmp_path / f"{cmd}.csv"
    code = main([cmd, "--model", model, "--out", str(out), "--norm-tol", "1e-5",
                 "--trace", str(tmp_path / "trace.csv")])
    text = capsys.readouterr().out
    assert code == 0
    assert "stabilized: true" in text and "K = " in text
    rows = bench.read_csv(out)
    assert rows[0]["task"] == cmd and rows[0]["status"] == "ok"
    assert out.with_suffix(".png").exists()
    assert (tmp_path / "trace.csv").exists()


def test_infeasible_exit_code(tmp_path):
    path = tmp_path / "stuck.txt"
    write_model(StateSpaceModel.build([[1.0]], [[0.0]], [[1.0]], name="stuck"), path)
    assert main(["stabilize", "--model", str(path), "--no-figures"]) == 1


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("dims 1 1 1\nA\n1 2\n")
    assert main(["stabilize", "--model", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["h2", "--model", str(tmp_path / "none.txt")]) == 2


def test_bad_x0_exit_code(gen_dir):
    model = str(sorted(gen_dir.glob("*.txt"))[0])
    assert main(["stabilize", "--model", model, "--x0", "a,b"]) == 2


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["bench", "--jobs"])
    assert err.value.code == 2


def test_bench_generated(tmp_path, capsys):
    out = tmp_path / "b.csv"
    args = ["bench", "stabilize", "--count", "5", "--n", "2-4", "--multistart", "2",
            "--seed", "1", "--no-timing", "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert "success_rate:" in capsys.readouterr().out
    assert main(args + ["--jobs", "2"]) == 0
    assert out.read_bytes() == first
    assert len(bench.read_csv(out)) == 10


def test_bench_models_and_task_option(gen_dir, capsys):
    models = [a for f in sorted(gen_dir.glob("*.txt")) for a in ("--model", str(f))]
    assert main(["bench", "--task", "h2", *models, "--no-timing"]) == 0
    out = capsys.readouterr().out
    assert out.startswith(",".join(bench.COLUMNS))
    assert out.count(",h2,") == 3


def test_bench_empty_prints_header(capsys):
    assert main(["bench"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == ",".join(bench.COLUMNS)


def test_shape_zn_and_frames(tmp_path, capsys):
    frames = tmp_path / "frames"
    code = main(["shape", "--zn", "--max-evals", "150", "--restarts", "3",
                 "--frames", str(frames), "--out", str(tmp_path / "s.csv")])
    assert code == 0
    assert "start (zn)" in capsys.readouterr().out
    rows = read_index(frames)
    fs = [float(r["f"]) for r in rows]
    assert fs[-1] < fs[0]
    assert (frames / "overlay.svg").exists() and (frames / "convergence.png").exists()
    assert bench.read_csv(tmp_path / "s.csv")[0]["x0_kind"] == "zn"


def test_shape_explicit_zn_and_x0(capsys):
    assert main(["shape", "--zn", "8,3.6276", "--max-evals", "30", "--restarts", "1"]) == 0
    assert main(["shape", "--x0", "1,0.5,0.5", "--max-evals", "30", "--restarts", "1"]) == 0
    assert "start (file)" in capsys.readouterr().out
    assert main(["shape", "--x0", "1,2"]) == 2
    assert main(["shape", "--zmin", "1.1", "--zmax", "1.0"]) == 2


def test_shape_plant_file(tmp_path):
    path = tmp_path / "lag2.txt"
    # 1/(s+1)^2 never reaches the ultimate-gain boundary, so use an explicit start
    write_model(StateSpaceModel.build([[0.0, 1.0], [-1.0, -2.0]], [[0.0], [1.0]], [[1.0, 0.0]],
                                      name="lag2"), path)
    assert main(["shape", "--plant", str(path), "--x0", "2,1,0.1", "--max-evals", "40",
                 "--restarts", "1"]) == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dsctrl", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("stabilize", "h2", "hinf", "shape", "gen", "bench"):
        assert cmd in res.stdout
