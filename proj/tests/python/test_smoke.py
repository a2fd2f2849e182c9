"""End-to-end smoke checks for the python bindings."""

import hashlib
import json
import sys

import swarmshare as ss


def check(label, cond):
    if not cond:
        print(f"FAIL {label}")
        sys.exit(1)
    print(f"ok {label}")


def main():
    # Bencode round-trip against the stdlib-independent encoder.
    value = {b"info": {b"length": 3, b"name": b"abc"}, b"tags": [1, b"x"]}
    check("bencode round-trip", ss.bdecode(ss.bencode(value)) == value)
    check("bencode canonical order",
          ss.bencode({"b": 1, "a": 2}) == b"d1:ai2e1:bi1ee")
    try:
        ss.bdecode(b"i01e")
        check("bencode typed error", False)
    except ss.BencodeDecodeError:
        check("bencode typed error", True)

    # Torrent build matches an independent SHA-1.
    content = bytes(range(256)) * 1000
    torrent = ss.create_torrent(content, "blob.bin", 16384)
    info = ss.torrent_info(torrent)
    check("piece count", info["piece_count"] == (len(content) + 16383) // 16384)
    first = hashlib.sha1(content[:16384]).hexdigest()
    check("sha1 agrees", ss.sha1_hex(content[:16384]) == first)
    check("verify ok", ss.verify(torrent, content)["ok"])
    check("verify catches tamper",
          not ss.verify(torrent, b"x" + content[1:])["ok"])

    # Simulator conservation and the amplification identity.
    scenario = {
        "file_size": "20MB",
        "mode": "http_only",
        "server_up": "2MB",
        "peers": [{"arrival_time": 0, "count": 4}],
    }
    report = json.loads(ss.simulate(json.dumps(scenario)))
    check("sim conservation", report["total_downloaded"] == 4 * 20_000_000)
    check("sim amplification", report["amplification"] == 1.0)

    # Economics constants.
    check("amplification ratio",
          abs(ss.amplification(366_680_000_000, 15_430_000_000_000) - 42.067)
          < 0.05)
    check("transfer cost", abs(ss.transfer_cost(157_300_000_000) - 4.33) <= 0.01)
    rows = ss.project(json.dumps(
        [{"name": "d", "size_bytes": "8.73GB", "downloads": 100}]))
    check("projection savings", abs(rows[0]["dollar_savings"] - 23.36) / 23.36 < 0.02)

    case = ss.case_study(json.dumps({
        "name": "corpus",
        "size_bytes": "160.68GB",
        "downloads": 96,
        "seeder_uploaded_bytes": "366.68GB",
        "total_downloaded_bytes": "15.43TB",
    }))
    check("case study invoice", abs(case["http_equivalent_cost"] - 424.32) < 1e-9)

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
