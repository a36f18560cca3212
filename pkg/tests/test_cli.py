import json
import subprocess
import sys

import pytest

from ltesig.cli import main
from ltesig.pcap import CaptureFrame, RntiType, write_capture
from ltesig.rrc import Imsi, PagingMessage, PagingRecord, STmsi, encode_pcch
from ltesig.synth import SynthModel, load_truth, write_trace

SIM_CFG = """\
resource_pool_size = 4
attacker_policy = release_loop
attacker_loop_period_ms = 10
legit_arrival_rate_per_s = 5
duration_ms = 2000
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def three_pages(tmp_path):
    msgs = [
        PagingMessage((PagingRecord(STmsi(1, 0xAB)),)),
        PagingMessage((PagingRecord(Imsi.from_string("001019876543210")),)),
        PagingMessage((PagingRecord(STmsi(1, 0xAB)),)),
    ]
    frames = [
        CaptureFrame(1_000_000 * (i + 1), encode_pcch(m), rnti_type=RntiType.P_RNTI, rnti=0xFFFE, sfn=i, subframe=0)
        for i, m in enumerate(msgs)
    ]
    path = tmp_path / "three.pcap"
    write_capture(frames, path)
    return path


def test_decode_text_and_jsonl(capsys, three_pages):
    code, out, _ = run(capsys, "decode", "--in", three_pages)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 3
    assert "s-TMSI 01000000ab" in lines[0]
    assert "IMSI *************10" in lines[1]
    assert "0010198765432" not in out

    code, out, _ = run(capsys, "decode", "--in", three_pages, "--format", "jsonl")
    rows = [json.loads(line) for line in out.splitlines()]
    assert [r["record"] for r in rows] == [0, 1, 2]
    assert rows[1]["records"][0]["imsi"] == "*************10"
    assert "0010198765432" not in out


def test_decode_reports_failures_inline(capsys, tmp_path):
    frames = [
        CaptureFrame(5, b"\x80", rnti_type=RntiType.P_RNTI),
        CaptureFrame(6, b"\x00\x00\x00"),
    ]
    path = tmp_path / "bad.pcap"
    write_capture(frames, path)
    raw = bytearray(path.read_bytes())
    path.write_bytes(bytes(raw) + raw[24:40] + b"mac-lxx")  # a third record with broken framing
    code, out, _ = run(capsys, "decode", "--in", path)
    assert code == 0
    lines = out.splitlines()
    assert "DecodeError unsupported_extension at bit 0" in lines[0]
    assert "MasterInformationBlock" in lines[1]
    assert "FramingError" in lines[2]


def test_decode_empty_and_unreadable(capsys, tmp_path):
    empty = tmp_path / "empty.pcap"
    write_capture([], empty)
    assert run(capsys, "decode", "--in", empty) == (0, "", "")
    corrupt = tmp_path / "corrupt.pcap"
    corrupt.write_bytes(b"not a capture at all....")
    code, _, err = run(capsys, "decode", "--in", corrupt)
    assert code == 1 and "magic" in err
    assert run(capsys, "decode", "--in", tmp_path / "missing.pcap")[0] == 1


def test_analyze_columns_and_csv(capsys, tmp_path, three_pages):
    empty = tmp_path / "empty.pcap"
    write_capture([], empty)
    code, out, _ = run(
        capsys, "analyze", "--in", three_pages, three_pages, empty,
        "--names", "Operator 1", "Operator 2", "Operator 3", "--csv", tmp_path / "csv",
    )
    assert code == 0
    assert "| Metrics" in out and "Operator 3" in out
    total_row = next(line for line in out.splitlines() if line.startswith("| Total Pages"))
    assert [c.strip() for c in total_row.strip("|").split("|")][1:] == ["3", "3", "0"]
    assert "0010198765432" not in out
    assert (tmp_path / "csv" / "Operator 1.sessions.csv").exists()
    assert (tmp_path / "csv" / "Operator 3.histogram.csv").read_text().startswith("bin_start_min")


def test_analyze_bad_arguments(capsys, three_pages):
    assert run(capsys, "analyze", "--in", three_pages, "--bin-minutes", "0")[0] == 2
    assert run(capsys, "analyze", "--in", three_pages, "--names", "a", "b")[0] == 2
    assert run(capsys, "analyze", "--in", three_pages, "--frobnicate")[0] == 2


def test_unknown_flag_and_subcommand(capsys):
    code, _, err = run(capsys, "decode", "--bogus")
    assert code == 2 and "usage" in err
    assert run(capsys, "explode")[0] == 2
    assert run(capsys)[0] == 2


def test_synth_then_analyze_matches_truth(capsys, tmp_path):
    path = tmp_path / "s.pcap"
    code, out, _ = run(capsys, "synth", "--out", path, "--seed", 1, "--duration-min", 5, "--population", 50)
    assert code == 0
    truth = load_truth(path)
    code, out, _ = run(capsys, "analyze", "--in", path, "--names", "s")
    rows = {line.split("|")[1].strip(): line.split("|")[2].strip() for line in out.splitlines() if line.startswith("| ")}
    assert rows["Total Pages"] == str(truth.stats.total_pages)
    assert rows["Unique TMSIs"] == str(truth.stats.unique_tmsis)
    assert rows["Longest active TMSI in minutes"] == f"{truth.stats.longest_lifespan_minutes:.2f}"


def test_synth_bad_model(capsys, tmp_path):
    assert run(capsys, "synth", "--out", tmp_path / "x.pcap", "--short-fraction", 2)[0] == 2


def test_compare(capsys, tmp_path):
    a, b = tmp_path / "a.pcap", tmp_path / "b.pcap"
    write_trace(SynthModel(duration_min=1, tmsi_population=30, mmecs=(1,)), a)
    write_trace(SynthModel(duration_min=1, tmsi_population=30, mmecs=(2,)), b)
    code, out, _ = run(capsys, "compare", "--a", a, "--b", b)
    assert code == 0 and "overlap: 0" in out and "jaccard: 0.000000" in out
    code, out, _ = run(capsys, "compare", "--a", a, "--b", a)
    assert "overlap: 30" in out and "jaccard: 1.000000" in out


def test_simulate_reproducible(capsys, tmp_path):
    cfg = tmp_path / "fixture.cfg"
    cfg.write_text(SIM_CFG)
    outputs = []
    for i in range(2):
        out, ev = tmp_path / f"m{i}.csv", tmp_path / f"e{i}.jsonl"
        assert run(capsys, "simulate", "--config", cfg, "--seed", 7, "--out", out, "--events", ev)[0] == 0
        outputs.append((out.read_bytes(), ev.read_bytes()))
    assert outputs[0] == outputs[1]
    assert b",7," in outputs[0][0]


def test_simulate_errors(capsys, tmp_path):
    assert run(capsys, "simulate", "--config", tmp_path / "missing.cfg")[0] == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("resource_pool_size = lots\n")
    assert run(capsys, "simulate", "--config", bad)[0] == 2
    assert run(capsys, "simulate", "--config", bad, "--seed", "x")[0] == 2


def test_simulate_stdout(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(SIM_CFG)
    code, out, _ = run(capsys, "simulate", "--config", cfg)
    assert code == 0 and out.startswith("resource_pool_size,")


def test_module_entry_point(tmp_path):
    path = tmp_path / "e.pcap"
    write_capture([], path)
    proc = subprocess.run([sys.executable, "-m", "ltesig", "decode", "--in", str(path)], capture_output=True)
    assert proc.returncode == 0 and proc.stdout == b""
