import io
import socket
import threading
import time

import pytest

from tripass.cli import main

PLAINTEXT = "THE FAMILY AND THE FAV"
TRACE = ("DLC GFWYID OLM OPA QBN", "EFP MPLTKN HOA OCB GHK", "UBR LKBDNI TQR TUF VGS")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- encrypt / decrypt ---

def test_encrypt_inline_generated(capsys):
    code, out, _ = run_cli(capsys, "encrypt", "--key", "KEY", "--mode", "generated", PLAINTEXT)
    assert code == 0
    assert out == TRACE[0]


def test_encrypt_inline_standard(capsys):
    code, out, _ = run_cli(capsys, "encrypt", "--key", "UP", "--mode", "standard", "THIS IS MY PAPER")
    assert code == 0
    assert out == "NWCH CH GN JPJTL"


def test_decrypt_reverses_encrypt(capsys):
    code, out, _ = run_cli(capsys, "decrypt", "--key", "UP", "--mode", "standard", "NWCH CH GN JPJTL")
    assert code == 0
    assert out == "THIS IS MY PAPER"


def test_round_trip_through_files(tmp_path, capsys):
    source = tmp_path / "plain.txt"
    source.write_text("Attack at dawn!\nBring 40 ladders.\n")
    middle = tmp_path / "cipher.txt"
    restored = tmp_path / "restored.txt"
    args = ["--key", "SECRET", "--mode", "generated", "--case", "preserve"]
    assert main(["encrypt", *args, "--in", str(source), "--out", str(middle)]) == 0
    assert main(["decrypt", *args, "--in", str(middle), "--out", str(restored)]) == 0
    assert restored.read_bytes() == source.read_bytes()
    capsys.readouterr()


def test_stdin_input(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("THIS IS MY PAPER"))
    code, out, _ = run_cli(capsys, "encrypt", "--key", "UP", "--mode", "standard")
    assert code == 0
    assert out == "NWCH CH GN JPJTL"


def test_identical_input_gives_identical_output(capsys):
    first = run_cli(capsys, "encrypt", "--key", "KEY", PLAINTEXT)
    second = run_cli(capsys, "encrypt", "--key", "KEY", PLAINTEXT)
    assert first == second


def test_invalid_key_exits_2(capsys):
    code, _, err = run_cli(capsys, "encrypt", "--key", "K3Y", "HELLO")
    assert code == 2
    assert "error" in err


def test_empty_key_exits_2(capsys):
    code, _, err = run_cli(capsys, "encrypt", "--key", "", "HELLO")
    assert code == 2


def test_missing_input_file_exits_3(capsys):
    code, _, err = run_cli(capsys, "encrypt", "--key", "KEY", "--in", "/no/such/file.txt")
    assert code == 3
    assert "error" in err


def test_both_inline_and_file_input_rejected(capsys, tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("X")
    with pytest.raises(SystemExit):
        main(["encrypt", "--key", "KEY", "HELLO", "--in", str(path)])
    capsys.readouterr()


# --- keygen ---

def test_keygen_generated(capsys):
    code, out, _ = run_cli(capsys, "keygen", "--key", "MYCODE", "--length", "10", "--mode", "generated")
    assert code == 0
    assert out == "MYCODEKRZI\n"


def test_keygen_standard(capsys):
    code, out, _ = run_cli(capsys, "keygen", "--key", "KEY", "--length", "18", "--mode", "standard")
    assert code == 0
    assert out == "KEYKEYKEYKEYKEYKEY\n"


def test_keygen_single_letter(capsys):
    code, out, _ = run_cli(capsys, "keygen", "--key", "A", "--length", "1")
    assert code == 0
    assert out == "A\n"


def test_keygen_rejects_zero_length(capsys):
    code, _, err = run_cli(capsys, "keygen", "--key", "A", "--length", "0")
    assert code == 2


# --- threepass ---

def test_threepass_local_prints_labeled_trace(capsys):
    code, out, _ = run_cli(
        capsys, "threepass", "local", "--sender-key", "KEY", "--recipient-key", "BUNG", PLAINTEXT
    )
    assert code == 0
    lines = out.splitlines()
    assert lines == [
        f"First Ciphertext  : {TRACE[0]}",
        f"Second Ciphertext : {TRACE[1]}",
        f"Third Ciphertext  : {TRACE[2]}",
        f"Plaintext         : {PLAINTEXT}",
    ]


def test_threepass_local_machine_output(capsys):
    code, out, _ = run_cli(
        capsys, "threepass", "local", "--sender-key", "KEY", "--recipient-key", "BUNG",
        "--machine", PLAINTEXT,
    )
    assert code == 0
    fields = dict(line.split("=", 1) for line in out.splitlines())
    assert fields["first_ciphertext"] == TRACE[0]
    assert fields["second_ciphertext"] == TRACE[1]
    assert fields["third_ciphertext"] == TRACE[2]
    assert fields["plaintext"] == PLAINTEXT


def test_threepass_local_policy_mismatch_is_protocol_error(capsys):
    # the CLI cannot make the parties disagree; force it in-process
    from tripass.protocol import run_local_exchange
    from tripass.errors import PolicyMismatch
    from tripass.cipher import TextPolicy

    with pytest.raises(PolicyMismatch):
        run_local_exchange(
            PLAINTEXT, "KEY", "BUNG",
            sender_policy=TextPolicy(), recipient_policy=TextPolicy(non_alpha="strip"),
        )


def _free_port() -> int:
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    return port


def test_threepass_over_the_cli_loopback(tmp_path, capsys):
    port = _free_port()
    delivered = tmp_path / "delivered.txt"
    server = threading.Thread(
        target=main,
        args=(
            [
                "threepass", "serve", "--listen", f"127.0.0.1:{port}",
                "--key", "BUNG", "--once", "--out", str(delivered), "--timeout", "5",
            ],
        ),
        daemon=True,
    )
    server.start()
    code = 3
    deadline = time.time() + 10
    while time.time() < deadline:
        code = main(
            ["threepass", "send", "--connect", f"127.0.0.1:{port}",
             "--key", "KEY", "--seed", "7", PLAINTEXT]
        )
        if code == 0:
            break
        time.sleep(0.05)
    server.join(timeout=10)
    out = capsys.readouterr().out
    assert code == 0
    assert delivered.read_text() == PLAINTEXT + "\n"
    assert TRACE[0] in out and TRACE[1] in out and TRACE[2] in out
    assert "exchange complete" in out


def test_threepass_send_to_nowhere_exits_3(capsys):
    port = _free_port()
    code, _, err = run_cli(
        capsys, "threepass", "send", "--connect", f"127.0.0.1:{port}",
        "--key", "KEY", "--timeout", "1", "HELLO",
    )
    assert code == 3
    assert "error" in err


def test_threepass_send_mode_mismatch_exits_4(capsys):
    from tripass.wire import Responder

    with Responder("BUNG") as responder:  # generated-mode recipient
        host, port = responder.address
        code, _, err = run_cli(
            capsys, "threepass", "send", "--connect", f"{host}:{port}",
            "--key", "KEY", "--mode", "standard", "HELLO",
        )
    assert code == 4
    assert "mode mismatch" in err


# --- attack ---

def test_attack_exit_codes(tmp_path, capsys, corpus_text):
    from tripass.cipher import KeyMode, encrypt_text

    broken = tmp_path / "std.txt"
    broken.write_text(encrypt_text(corpus_text, "KEY", KeyMode.STANDARD_REPEAT))
    resistant = tmp_path / "gen.txt"
    resistant.write_text(encrypt_text(corpus_text, "KEY", KeyMode.GENERATED))

    code, out, _ = run_cli(capsys, "attack", "--in", str(broken))
    assert code == 0
    assert "verdict: broken" in out
    assert "recovered key: KEY" in out

    code, out, _ = run_cli(capsys, "attack", "--in", str(resistant))
    assert code == 1
    assert "verdict: resisted" in out


def test_attack_machine_output(tmp_path, capsys, corpus_text):
    from tripass.cipher import KeyMode, encrypt_text

    path = tmp_path / "std.txt"
    path.write_text(encrypt_text(corpus_text, "KEY", KeyMode.STANDARD_REPEAT))
    code, out, _ = run_cli(capsys, "attack", "--machine", "--in", str(path))
    assert code == 0
    fields = dict(line.split("=", 1) for line in out.splitlines())
    assert fields["verdict"] == "broken"
    assert fields["recovered_key"] == "KEY"
    assert float(fields["score"]) < 2.0
    assert fields["decryption"].startswith("FOURSCORE")


def test_attack_threshold_flag(tmp_path, capsys, corpus_text):
    from tripass.cipher import KeyMode, encrypt_text

    path = tmp_path / "std.txt"
    path.write_text(encrypt_text(corpus_text, "KEY", KeyMode.STANDARD_REPEAT))
    code, out, _ = run_cli(capsys, "attack", "--threshold", "0.01", "--in", str(path))
    assert code == 1  # nothing is English enough under that bar


def test_attack_custom_frequency_table(tmp_path, capsys, corpus_text):
    from tripass.cipher import KeyMode, encrypt_text
    from importlib import resources

    bundled = resources.files("tripass").joinpath("data/english_frequencies.txt").read_text()
    table = tmp_path / "freq.txt"
    table.write_text(bundled)
    path = tmp_path / "std.txt"
    path.write_text(encrypt_text(corpus_text, "KEY", KeyMode.STANDARD_REPEAT))
    code, out, _ = run_cli(capsys, "attack", "--freq-table", str(table), "--in", str(path))
    assert code == 0
    assert "recovered key: KEY" in out
