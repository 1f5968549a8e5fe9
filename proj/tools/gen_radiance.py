#!/usr/bin/env python3
"""Writes a one-year clear-sky irradiance table (`timestamp,watt_per_msq`).

Global horizontal irradiance follows the Haurwitz clear-sky model,
GHI = 1098 cos(z) exp(-0.057 / cos(z)), with the solar zenith z from the
usual declination / equation-of-time approximations. Output is UTC and
deterministic, so the committed table can be regenerated byte for byte.
"""

import argparse
import math
from datetime import datetime, timedelta, timezone


def zenith_cos(t: datetime, lat: float, lon: float) -> float:
    day = t.timetuple().tm_yday
    hour = t.hour + t.minute / 60.0
    g = 2.0 * math.pi / 365.0 * (day - 1 + (hour - 12.0) / 24.0)
    decl = (0.006918 - 0.399912 * math.cos(g) + 0.070257 * math.sin(g) - 0.006758 * math.cos(2 * g)
            + 0.000907 * math.sin(2 * g) - 0.002697 * math.cos(3 * g) + 0.00148 * math.sin(3 * g))
    eqtime = 229.18 * (0.000075 + 0.001868 * math.cos(g) - 0.032077 * math.sin(g)
                       - 0.014615 * math.cos(2 * g) - 0.040849 * math.sin(2 * g))
    solar_minutes = hour * 60.0 + eqtime + 4.0 * lon
    hour_angle = math.radians(solar_minutes / 4.0 - 180.0)
    phi = math.radians(lat)
    return math.sin(phi) * math.sin(decl) + math.cos(phi) * math.cos(decl) * math.cos(hour_angle)


def ghi(cos_z: float, peak: float) -> float:
    if cos_z <= 0.0:
        return 0.0
    return min(peak, 1098.0 * cos_z * math.exp(-0.057 / cos_z))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--year", type=int, default=2016)
    ap.add_argument("--lat", type=float, default=44.18)
    ap.add_argument("--lon", type=float, default=12.24)
    ap.add_argument("--step-min", type=int, default=15)
    ap.add_argument("--peak", type=float, default=1000.0)
    ap.add_argument("--out", default="scenarios/data/radiance_2016.csv")
    args = ap.parse_args()

    t = datetime(args.year, 1, 1, tzinfo=timezone.utc)
    end = datetime(args.year + 1, 1, 1, tzinfo=timezone.utc)
    step = timedelta(minutes=args.step_min)
    with open(args.out, "w", newline="\n") as out:
        out.write("timestamp,watt_per_msq\n")
        while t < end:
            w = ghi(zenith_cos(t, args.lat, args.lon), args.peak)
            out.write(f"{t.strftime('%Y-%m-%dT%H:%M:%SZ')},{w:.1f}\n")
            t += step


if __name__ == "__main__":
    main()
