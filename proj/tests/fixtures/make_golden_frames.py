#!/usr/bin/env python3
"""Writes golden_frames.txt from an independent Python encoder.

Line format: name kind direction counter frame_hex
kind is "plain" or "sealed"; sealed frames use key bytes 00 01 .. 1f and the
nonce u32le(direction) || u64le(counter).
"""
import struct
from pathlib import Path

from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

KEY = bytes(range(32))
TYPES = dict(hello=1, align_request=2, align_response=3, batch_activations=4, batch_gradients=5,
             metrics_report=6, checkpoint_chunk=7, shutdown=8, error=9)


def s16(s: bytes) -> bytes:
    return struct.pack("<H", len(s)) + s


def header(t: int, flags: int, n: int) -> bytes:
    return b"VFIS" + struct.pack("<HBBQ", 1, t, flags, n)


def plain(t: str, payload: bytes) -> bytes:
    return header(TYPES[t], 0, len(payload)) + payload


def sealed(t: str, payload: bytes, direction: int, counter: int) -> bytes:
    h = header(TYPES[t], 1, len(payload))
    nonce = struct.pack("<IQ", direction, counter)
    return h + ChaCha20Poly1305(KEY).encrypt(nonce, payload, h)


def batch(epoch, step, ids, features, elems, fmt):
    out = struct.pack("<IIII", epoch, step, len(ids), features)
    out += b"".join(struct.pack("<Q", i) for i in ids)
    out += b"".join(struct.pack(fmt, v) for v in elems)
    return out


hello = (struct.pack("<B", 0) + s16(b"tiny") + struct.pack("<IQBII", 8, 7, 8, 100, 0) + struct.pack("<B", 5)
         + b"".join(struct.pack("<I", v) for v in (25, 50, 75, 150, 200)) + struct.pack("<B", 1))
ids = struct.pack("<Q", 4) + b"".join(struct.pack("<Q", v) for v in (1, 2, 3, 1000000007))
act = batch(2, 5, (11, 42), 5, (0.5, -1.25, 3.0, 1e-300, -0.0, 1.0 / 3, 2.5e10, -7.0, 0.125, 65536.0), "<d")
grad32 = batch(2, 5, (11, 42), 5, (0.5, -1.25, 3.0, 0.25, -2.0, 1.5, 8.0, -0.125, 0.0, 4.0), "<f")
report = struct.pack("<IIddd", 3, 46, 0.25, 0.9375, 0.8125)
chunk = struct.pack("<IIQ", 1, 3, 6) + b"VFCK\x01\x00"
shutdown = struct.pack("<I", 0)
error = struct.pack("<H", 1) + s16(b"batch_size") + s16(b"HELLO negotiation mismatch")

rows = [
    ("hello_plain", "plain", 0, 0, plain("hello", hello)),
    ("hello_sealed", "sealed", 0, 0, sealed("hello", hello, 0, 0)),
    ("align_request_sealed", "sealed", 0, 1, sealed("align_request", ids, 0, 1)),
    ("align_response_sealed", "sealed", 1, 1, sealed("align_response", ids, 1, 1)),
    ("activations_sealed", "sealed", 0, 2, sealed("batch_activations", act, 0, 2)),
    ("activations_plain", "plain", 0, 0, plain("batch_activations", act)),
    ("gradients_f32_plain", "plain", 0, 0, plain("batch_gradients", grad32)),
    ("gradients_f32_sealed", "sealed", 1, 2, sealed("batch_gradients", grad32, 1, 2)),
    ("metrics_report_sealed", "sealed", 1, 3, sealed("metrics_report", report, 1, 3)),
    ("checkpoint_chunk_plain", "plain", 0, 0, plain("checkpoint_chunk", chunk)),
    ("shutdown_sealed", "sealed", 0, 9, sealed("shutdown", shutdown, 0, 9)),
    ("error_plain", "plain", 0, 0, plain("error", error)),
    ("shutdown_counter_max", "sealed", 1, 2**64 - 1, sealed("shutdown", shutdown, 1, 2**64 - 1)),
]

out = Path(__file__).with_name("golden_frames.txt")
with out.open("w") as f:
    f.write("# name kind direction counter frame_hex (generated by make_golden_frames.py)\n")
    for name, kind, d, c, frame in rows:
        f.write(f"{name} {kind} {d} {c} {frame.hex()}\n")
print(f"wrote {len(rows)} frames to {out}")
