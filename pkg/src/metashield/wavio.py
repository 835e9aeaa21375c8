"""Minimal RIFF/WAVE reader and writer for mono 16-bit PCM and 32-bit float.

The reader reports the byte offset of any format violation, which the CLI
surfaces as a data error.
"""

import os
import struct
import tempfile
from contextlib import contextmanager

import numpy as np

from ._validation import DataFormatError
from .perturb import AudioClip

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@contextmanager
def atomic_path(path):
    """Yield a temporary sibling path; rename it onto ``path`` on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def read_wav(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_wav(data, path)


def parse_wav(data, path=None):
    if len(data) < 12:
        raise DataFormatError("file too short for a RIFF header", path, len(data))
    if data[0:4] != b"RIFF":
        raise DataFormatError(f"expected 'RIFF', found {data[0:4]!r}", path, 0)
    if data[8:12] != b"WAVE":
        raise DataFormatError(f"expected 'WAVE', found {data[8:12]!r}", path, 8)

    fmt = None
    samples = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if body + size > len(data):
            raise DataFormatError(
                f"chunk {chunk_id!r} declares {size} bytes but only "
                f"{len(data) - body} remain", path, pos + 4)
        if chunk_id == b"fmt ":
            if size < 16:
                raise DataFormatError("fmt chunk shorter than 16 bytes", path, pos + 4)
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == WAVE_FORMAT_EXTENSIBLE:
                if size < 40:
                    raise DataFormatError("extensible fmt chunk shorter than 40 bytes",
                                          path, pos + 4)
                (tag,) = struct.unpack_from("<H", data, body + 24)
            if channels != 1:
                raise DataFormatError(f"only mono audio is supported, got {channels} channels",
                                      path, body + 2)
            if (tag, bits) not in ((WAVE_FORMAT_PCM, 16), (WAVE_FORMAT_IEEE_FLOAT, 32)):
                raise DataFormatError(
                    f"unsupported sample format (tag {tag:#06x}, {bits} bits); "
                    "expected 16-bit PCM or 32-bit float", path, body)
            if rate == 0:
                raise DataFormatError("sample rate is zero", path, body + 4)
            fmt = (tag, rate, bits, block_align)
        elif chunk_id == b"data":
            if fmt is None:
                raise DataFormatError("data chunk before fmt chunk", path, pos)
            tag, rate, bits, block_align = fmt
            if size % block_align:
                raise DataFormatError(
                    f"data size {size} is not a multiple of the {block_align}-byte frame",
                    path, pos + 4)
            raw = data[body:body + size]
            if tag == WAVE_FORMAT_PCM:
                samples = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
            else:
                samples = np.frombuffer(raw, dtype="<f4").astype(float)
                bad = np.flatnonzero(~np.isfinite(samples))
                if len(bad):
                    raise DataFormatError("non-finite float sample", path,
                                          body + 4 * int(bad[0]))
        pos = body + size + (size & 1)
    if fmt is None:
        raise DataFormatError("no fmt chunk found", path, 12)
    if samples is None:
        raise DataFormatError("no data chunk found", path, pos)
    return AudioClip(samples, fmt[1])


def wav_bytes(clip, subtype="PCM_16"):
    """Serialize ``clip`` as a canonical 44-byte-header WAV file."""
    x = np.asarray(clip.samples, dtype=float)
    if subtype == "PCM_16":
        pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        tag, bits = WAVE_FORMAT_PCM, 16
    elif subtype == "FLOAT":
        pcm = x.astype("<f4")
        tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown WAV subtype {subtype!r}")
    payload = pcm.tobytes()
    block = bits // 8
    rate = clip.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, tag, 1, rate, rate * block, block, bits)
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


def write_wav(path, clip, subtype="PCM_16"):
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as fh:
            fh.write(wav_bytes(clip, subtype))
