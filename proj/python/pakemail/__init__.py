"""Fingerprint authentication with SPAKE2 and key confirmation."""

from ._core import (  # noqa: F401
    DecodeError,
    Error,
    InvalidArgument,
    PakeSession,
    StateError,
    attack_cost,
    fingerprint_of,
    five_word_cases,
    loopback_handshake,
    run_adversary,
    trustwords,
)
