#!/usr/bin/env python3
"""Stand-in transcoder for tests.

fake_codec.py copy IN OUT            byte copy (lossless)
fake_codec.py quantize BITS IN OUT   round samples to BITS bits
fake_codec.py pack IN OUT            raw container: rate + float32 samples
fake_codec.py unpack RATE IN OUT     container back to WAV, naive resample to RATE
fake_codec.py fail IN OUT            exit 3 without output
fake_codec.py garbage IN OUT         write bytes that are not WAV
"""
import shutil
import struct
import sys

import numpy as np
from scipy.io import wavfile


def read(path):
    rate, x = wavfile.read(path)
    if x.dtype.kind == "i":
        x = x.astype(np.float64) / float(np.iinfo(x.dtype).max)
    return rate, np.asarray(x, dtype=np.float64)


def write(path, rate, x):
    wavfile.write(path, rate, np.asarray(x, dtype=np.float32))


def main(argv):
    mode = argv[1]
    if mode == "copy":
        shutil.copyfile(argv[2], argv[3])
    elif mode == "quantize":
        bits = int(argv[2])
        rate, x = read(argv[3])
        q = float(2 ** (bits - 1))
        write(argv[4], rate, np.round(x * q) / q)
    elif mode == "pack":
        rate, x = read(argv[2])
        with open(argv[3], "wb") as f:
            f.write(struct.pack("<I", rate))
            f.write(np.asarray(x, dtype="<f4").tobytes())
    elif mode == "unpack":
        target = int(argv[2])
        with open(argv[3], "rb") as f:
            rate = struct.unpack("<I", f.read(4))[0]
            x = np.frombuffer(f.read(), dtype="<f4").astype(np.float64)
        if target != rate and len(x):
            n = int(round(len(x) * target / rate))
            x = np.interp(np.arange(n) * rate / target, np.arange(len(x)), x)
        write(argv[4], target, x)
    elif mode == "fail":
        sys.stderr.write("fake codec refused\n")
        return 3
    elif mode == "garbage":
        with open(argv[3], "wb") as f:
            f.write(b"not a wav file")
    else:
        sys.stderr.write("unknown mode %s\n" % mode)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
