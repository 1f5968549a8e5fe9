#!/usr/bin/env python3
"""Emits a C++ header of reference Modbus/TCP frames.

The frames are packed here with `struct`, independently of the C++ codec,
so the acceptance suite compares the codec against bytes it did not make.
"""

import struct
import sys


def mbap(tid: int, unit: int, pdu: bytes) -> bytes:
    return struct.pack(">HHHB", tid, 0, len(pdu) + 1, unit) + pdu


FRAMES = {
    # read input registers, address 100, count 1
    "kGoldenReadInput": mbap(1, 1, struct.pack(">BHH", 0x04, 100, 1)),
    # reply carrying 9500 W
    "kGoldenReadInputReply": mbap(1, 1, struct.pack(">BBH", 0x04, 2, 9500)),
    # write single coil 100 on
    "kGoldenWriteCoilOn": mbap(2, 1, struct.pack(">BHH", 0x05, 100, 0xFF00)),
    # write single coil 101 off
    "kGoldenWriteCoilOff": mbap(3, 1, struct.pack(">BHH", 0x05, 101, 0x0000)),
    # illegal data address on read input registers
    "kGoldenIllegalAddress": mbap(4, 1, struct.pack(">BB", 0x84, 0x02)),
}


def main() -> None:
    out = sys.argv[1]
    with open(out, "w") as f:
        f.write("#pragma once\n// generated by tools/modbus_golden.py\n#include <cstdint>\n#include <vector>\n\n")
        for name, frame in FRAMES.items():
            body = ", ".join(f"0x{b:02x}" for b in frame)
            f.write(f"inline const std::vector<std::uint8_t> {name} = {{{body}}};\n")


if __name__ == "__main__":
    main()
