import os
import signal
import subprocess
import time
from pathlib import Path

import pytest

from conftest import CLI, Client, both, free_port

SECRET = "purple-walrus-9137"


def auth_pair(alice, bob, pw_a=SECRET, pw_b=SECRET, *extra):
    return both(alice.spawn("auth", bob.identity, *extra, stdin=pw_a + "\n"),
                bob.spawn("auth", alice.identity, *extra, stdin=pw_b + "\n"))


def test_status_on_fresh_keystore(pair):
    alice, _ = pair
    r = alice.run("status")
    assert r.returncode == 0
    lines = r.stdout.splitlines()
    peers = lines.index("peers")
    exchanges = lines.index("exchanges")
    assert exchanges - peers == 3  # header, column names, blank
    assert lines[exchanges + 1].startswith("exchange")
    assert len(lines) == exchanges + 2


def test_auth_success_and_trustwords(pair):
    alice, bob = pair
    (ra, oa, ea), (rb, ob, eb) = auth_pair(alice, bob)
    assert (ra, rb) == (0, 0), oa + ea + ob + eb
    assert "SUCCESS" in oa and "SUCCESS" in ob
    assert "Never send the secret" in ea
    words_a = [l for l in oa.splitlines() if "trustwords:" in l]
    words_b = [l for l in ob.splitlines() if "trustwords:" in l]
    assert words_a == words_b and len(words_a[0].split(":")[1].split()) == 5
    st = alice.run("status").stdout
    assert "bob@example.org" in st and "authenticated" in st and "success" in st
    # trustwords subcommand agrees with the auth output
    tw = alice.run("trustwords", bob.identity)
    assert tw.returncode == 0
    assert tw.stdout.split() == words_a[0].split(":")[1].split()


def test_auth_mismatch_exits_2(pair):
    alice, bob = pair
    (ra, oa, _), (rb, ob, _) = auth_pair(alice, bob, "one", "two")
    assert (ra, rb) == (2, 2)
    assert "passwords did not match" in oa


def test_timeout_exits_3_and_lockout_exits_4(pair):
    alice, bob = pair
    alice.timeout = 1
    for _ in range(3):
        r = alice.run("auth", bob.identity, stdin="x\n")
        assert r.returncode == 3
        assert "did not respond" in r.stdout
    r = alice.run("auth", bob.identity, stdin="x\n")
    assert r.returncode == 4
    assert "override" in r.stderr
    r = alice.run("auth", bob.identity, "--override-lockout", stdin="x\n")
    assert r.returncode == 3


def test_renew_without_chain_exits_6(pair):
    alice, bob = pair
    r = alice.run("renew", bob.identity)
    assert r.returncode == 6
    assert "pakemail auth" in r.stderr


def test_renew_after_auth_and_after_keystore_loss(pair):
    alice, bob = pair
    auth_pair(alice, bob)
    (ra, _, ea), (rb, _, eb) = both(alice.spawn("renew", bob.identity), bob.spawn("renew", alice.identity))
    assert (ra, rb) == (0, 0), ea + eb
    bob.keystore.unlink()
    r = bob.run("renew", alice.identity)
    assert r.returncode == 6
    assert "fall back" in r.stderr


def test_send_refused_before_auth_then_round_trip(pair):
    alice, bob = pair
    r = alice.run("send", bob.identity, "--message", "hi")
    assert r.returncode != 0 and "not authenticated" in r.stderr
    auth_pair(alice, bob)
    assert alice.run("send", bob.identity, stdin="meet at noon").returncode == 0
    r = bob.run("recv", "--wait", "5")
    assert r.returncode == 0
    assert "from alice@example.org: meet at noon" in r.stdout


def test_attack_cost_cli():
    out = subprocess.run([CLI, "attack-cost", "--paper-cases"], capture_output=True, text=True)
    assert out.returncode == 0
    rows = [l.split() for l in out.stdout.splitlines()[1:]]
    assert 37 <= float(rows[0][9]) <= 39
    assert 31 <= float(rows[1][9]) <= 33
    one = subprocess.run([CLI, "attack-cost", "--b", "1", "--r", "0", "--u", "0"], capture_output=True, text=True)
    assert one.returncode == 0
    cols = one.stdout.splitlines()[1].split()
    assert float(cols[8]) == 1.0 and float(cols[9]) == 0.0
    t0 = subprocess.run([CLI, "attack-cost", "--b", "80", "--r", "16", "--u", "48"], capture_output=True, text=True)
    assert t0.returncode == 7


def test_trustwords_cli_identical():
    f = "ab" * 20
    r = subprocess.run([CLI, "trustwords", f, f, "--count", "10"], capture_output=True, text=True)
    words = r.stdout.split()
    assert r.returncode == 0 and len(words) == 10 and len(set(words)) == 1


def test_toy_group_needs_opt_in(pair):
    alice, bob = pair
    r = alice.run("--group", "toy", "auth", bob.identity, stdin="x\n")
    assert r.returncode == 1 and "--insecure-toy-group" in r.stderr


def test_relay_down_exits_5(tmp_path):
    port = free_port()
    a = Client(tmp_path, "alice@example.org", transport=f"relay:127.0.0.1:{port}")
    assert a.run("init").returncode == 0
    r = a.run("auth", "bob@example.org", stdin="x\n")
    assert r.returncode == 5


def test_relay_between_processes(tmp_path):
    port = free_port()
    log = tmp_path / "relay.log"
    relay = subprocess.Popen([CLI, "relay-serve", "--listen", f"127.0.0.1:{port}", "--log", str(log)],
                             stdout=subprocess.PIPE, text=True)
    try:
        assert "listening" in relay.stdout.readline()
        alice = Client(tmp_path, "alice@example.org", transport=f"relay:127.0.0.1:{port}")
        bob = Client(tmp_path, "bob@example.org", transport=f"relay:127.0.0.1:{port}")
        alice.run("init")
        bob.run("init")
        (ra, oa, ea), (rb, ob, eb) = auth_pair(alice, bob)
        assert (ra, rb) == (0, 0), oa + ea + ob + eb
        # The relay log holds opaque blobs only, never the secret.
        assert SECRET.encode() not in log.read_bytes()
    finally:
        relay.send_signal(signal.SIGTERM)
        relay.wait(timeout=10)
    assert relay.returncode == 0


def test_config_file_and_env(tmp_path):
    conf = tmp_path / "pakemail.conf"
    conf.write_text(f"identity = carol@example.org\nkeystore = {tmp_path / 'carol.ks'}\n")
    r = subprocess.run([CLI, "--config", str(conf), "init"], capture_output=True, text=True)
    assert r.returncode == 0 and "carol@example.org" in r.stdout
    env = dict(os.environ, PAKEMAIL_IDENTITY="dave@example.org", PAKEMAIL_KEYSTORE=str(tmp_path / "dave.ks"))
    r = subprocess.run([CLI, "--config", str(conf), "init"], capture_output=True, text=True, env=env)
    assert "dave@example.org" in r.stdout
    conf.write_text("this is not a config\n")
    r = subprocess.run([CLI, "--config", str(conf), "status"], capture_output=True, text=True)
    assert r.returncode == 1 and "line 1" in r.stderr


def test_secret_never_in_argv_or_files(pair, tmp_path):
    alice, bob = pair
    pa = alice.spawn("auth", bob.identity, stdin=SECRET + "\n")
    pb = bob.spawn("auth", alice.identity, stdin=SECRET + "\n")
    for p in (pa, pb):
        try:
            cmdline = Path(f"/proc/{p.pid}/cmdline").read_bytes()
            assert SECRET.encode() not in cmdline
        except FileNotFoundError:
            pass
    outs = both(pa, pb)
    assert [o[0] for o in outs] == [0, 0]
    for _, stdout, stderr in outs:
        assert SECRET not in stdout and SECRET not in stderr
    for f in tmp_path.rglob("*"):
        if f.is_file():
            assert SECRET.encode() not in f.read_bytes(), f
    # There is no way to pass it on the command line at all.
    help_text = subprocess.run([CLI, "auth", "--help"], capture_output=True, text=True).stdout
    options = [l.split()[0] for l in help_text.splitlines() if l.strip().startswith("-")]
    assert options and not [o for o in options if "pass" in o or "secret" in o], options


def test_key_rotation_triggers_auto_renew(pair):
    alice, bob = pair
    auth_pair(alice, bob)
    before = alice.run("status").stdout
    assert alice.run("init", "--force").returncode == 0
    # Bob answers without a prompt: his `recv` pump auto-renews.
    pa = alice.spawn("renew", bob.identity)
    deadline = time.time() + 20
    while pa.poll() is None and time.time() < deadline:
        bob.run("recv")
    out, err = pa.communicate(timeout=20)
    assert pa.returncode == 0, out + err
    assert "SUCCESS" in out
    assert alice.run("status").stdout != before


def test_passphrase_protected_keystore(tmp_path):
    c = Client(tmp_path, "erin@example.org")
    env = dict(c.env(), PAKEMAIL_KEYSTORE_PASSPHRASE="hunter2hunter2")
    r = subprocess.run(c.argv("init"), capture_output=True, text=True, env=env)
    assert r.returncode == 0
    assert c.run("status").returncode == 1
    r = subprocess.run(c.argv("status"), capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "erin@example.org" in r.stdout
