import pytest

from dualog.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_encode_one(capsys):
    code, out, _ = run(capsys, "encode", "1.0")
    assert code == 0
    assert out.strip() == "+ a=0 b=0x000000"


def test_encode_decode_roundtrip(capsys):
    code, out, _ = run(capsys, "encode", "0.99999994039535522461")
    assert code == 0
    assert out.strip() == "+ a=-1 b=0x58b90b"
    code, out, _ = run(capsys, "decode", out.strip())
    assert code == 0
    assert abs(float(out.strip()) - (1 - 2 ** -24)) < 1e-7


def test_decode_rejects_unnormalized(capsys):
    code, _, err = run(capsys, "decode", "+ a=0 b=0x700000")
    assert code == 2
    assert "not normalized" in err


def test_encode_out_of_range(capsys):
    code, _, err = run(capsys, "encode", "1e60")
    assert code == 2
    assert "exponent" in err


def test_exp_sweep_small_deterministic(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["exp-sweep", "--x-bits", "12", "--y-bits", "12", "--I", "5", "--lp", "16",
            "--r", "1", "--seed", "3"]
    assert run(capsys, *args, "--out", str(out1))[0] == 0
    assert run(capsys, *args, "--out", str(out2))[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_text().count("\n") == 3  # comment, header, one row


def test_log_sweep_small(tmp_path, capsys):
    out = tmp_path / "l.csv"
    code, text, _ = run(capsys, "log-sweep", "--x-bits", "10", "--y-bits", "10",
                        "--I", "4", "--lp", "14", "--r", "1", "--s", "3", "--out", str(out))
    assert code == 0
    assert "monotone" in out.read_text()


def test_invalid_kernel_params_exit_2(capsys):
    code, _, err = run(capsys, "exp-sweep", "--x-bits", "12", "--y-bits", "12",
                       "--I", "2", "--lp", "16", "--r", "1")
    assert code == 2
    assert "I must be" in err


def test_add_sweep_and_csv(tmp_path, capsys):
    out = tmp_path / "add.csv"
    code, text, _ = run(capsys, "add-sweep", "--alpha", "1", "--beta", "1",
                        "--x-samples", "128", "--y-count", "8", "--seed", "1",
                        "--out", str(out))
    assert code == 0
    assert "max=" in text and "incorrect=" in text
    assert out.read_text().splitlines()[1] == "alpha,beta,samples,max_logulp,frac_incorrect"


def test_cancel_study_cli(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, text, _ = run(capsys, "cancel-study", "--alpha", "1", "--k-max", "4",
                        "--out", str(out))
    assert code == 0
    assert "135111" in text


def test_qr_bench_small(tmp_path, capsys):
    out = tmp_path / "qr.csv"
    code, text, _ = run(capsys, "qr-bench", "--n", "4", "--kappas", "100",
                        "--trials", "1", "--seed", "2", "--arithmetics",
                        "log32,float32", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "kappa,trial,arithmetic,error_l2,seed"
    assert len(lines) == 4  # comment + header + 2 rows


def test_dot_with_vector_files(tmp_path, capsys):
    vec = tmp_path / "v.bin"
    assert run(capsys, "gen-vectors", "--n", "8", "--seed", "4", "--out", str(vec))[0] == 0
    code, text, _ = run(capsys, "dot", "--x-file", str(vec), "--y-file", str(vec))
    assert code == 0
    assert "relative error" in text


def test_dot_random(capsys):
    code, text, _ = run(capsys, "dot", "--n", "16", "--seed", "1")
    assert code == 0
    assert "oracle:" in text


def test_dot_needs_both_files(tmp_path, capsys):
    vec = tmp_path / "v.bin"
    run(capsys, "gen-vectors", "--n", "4", "--seed", "4", "--out", str(vec))
    code, _, err = run(capsys, "dot", "--x-file", str(vec))
    assert code == 2 and "both" in err


def test_bench_runs(capsys):
    code, text, _ = run(capsys, "bench", "--n", "5000", "--repeat", "1")
    assert code == 0
    assert "numpy" in text
