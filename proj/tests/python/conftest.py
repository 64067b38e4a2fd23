import os
import shutil
import socket
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("PAKEMAIL_CLI", str(Path(__file__).resolve().parents[2] / "build" / "pakemail"))


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Client:
    """One CLI identity with its own keystore, sharing a loopback spool."""

    def __init__(self, root, identity, transport="loopback", extra=()):
        self.root = root
        self.identity = identity
        self.keystore = root / f"{identity}.keystore"
        self.transport = transport
        self.extra = list(extra)
        self.timeout = 15

    def argv(self, *args):
        return [CLI, "--identity", self.identity, "--keystore", str(self.keystore),
                "--transport", self.transport, "--timeout", str(self.timeout), *self.extra, *args]

    def env(self):
        env = dict(os.environ)
        env["PAKEMAIL_LOOPBACK_SPOOL"] = str(self.root / "spool")
        env.pop("PAKEMAIL_KEYSTORE_PASSPHRASE", None)
        return env

    def run(self, *args, stdin="", timeout=60):
        return subprocess.run(self.argv(*args), input=stdin, capture_output=True, text=True,
                              env=self.env(), timeout=timeout)

    def spawn(self, *args, stdin=""):
        p = subprocess.Popen(self.argv(*args), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                             stderr=subprocess.PIPE, text=True, env=self.env())
        p.stdin.write(stdin)
        p.stdin.close()
        p.stdin = None  # already fed; communicate() must not touch it
        return p


def both(a_proc, b_proc, timeout=60):
    out = []
    for p in (a_proc, b_proc):
        stdout, stderr = p.communicate(timeout=timeout)
        out.append((p.returncode, stdout, stderr))
    return out


@pytest.fixture
def pair(tmp_path):
    alice = Client(tmp_path, "alice@example.org")
    bob = Client(tmp_path, "bob@example.org")
    assert alice.run("init").returncode == 0
    assert bob.run("init").returncode == 0
    return alice, bob


@pytest.fixture(scope="session")
def cli():
    assert shutil.which(CLI) or Path(CLI).exists(), CLI
    return CLI
