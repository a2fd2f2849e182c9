"""Hybrid HTTP + swarm dataset distribution toolkit."""

from swarmshare._core import (
    BencodeDecodeError,
    EconError,
    MetainfoError,
    SimError,
    amplification,
    bdecode,
    bencode,
    case_study,
    create_torrent,
    project,
    sha1_hex,
    simulate,
    torrent_info,
    transfer_cost,
    verify,
)

__all__ = [
    "BencodeDecodeError",
    "EconError",
    "MetainfoError",
    "SimError",
    "amplification",
    "bdecode",
    "bencode",
    "case_study",
    "create_torrent",
    "project",
    "sha1_hex",
    "simulate",
    "torrent_info",
    "transfer_cost",
    "verify",
]
