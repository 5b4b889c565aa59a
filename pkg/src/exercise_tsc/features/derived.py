"""Orientation and magnitude channels derived from raw IMU axes.

Per device, five signals are appended to the nine raw ones: pitch and roll
from the accelerometer tilt, a tilt-compensated magnetometer heading (yaw),
and the accelerometer and gyroscope vector magnitudes.
"""

from __future__ import annotations

import numpy as np

from ..errors import MissingChannelError
from ..series import MultivariateSeries

RAW_AXES = ("acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z",
            "mag_x", "mag_y", "mag_z")
DERIVED = ("pitch", "roll", "yaw", "acc_mag", "gyro_mag")


def orientation(acc: np.ndarray, mag: np.ndarray):
    """``(pitch, roll, yaw)`` in radians from ``(3, T)`` accelerometer and magnetometer arrays."""
    ax, ay, az = acc
    mx, my, mz = mag
    pitch = np.arctan2(-ax, np.sqrt(ay * ay + az * az))
    roll = np.arctan2(ay, az)
    # heading with the magnetometer rotated back into the horizontal plane
    xh = mx * np.cos(pitch) + my * np.sin(roll) * np.sin(pitch) + mz * np.cos(roll) * np.sin(pitch)
    yh = my * np.cos(roll) - mz * np.sin(roll)
    yaw = np.arctan2(-yh, xh)
    return pitch, roll, yaw


def imu_devices(series: MultivariateSeries) -> list:
    """Device prefixes present in channel names like ``LW_acc_x`` (``""`` for bare names)."""
    devices = []
    for name in series.channel_names:
        for axis in RAW_AXES:
            if name == axis or name.endswith("_" + axis):
                prefix = name[: len(name) - len(axis)]
                if prefix not in devices:
                    devices.append(prefix)
    return devices


def derive_imu_channels(imu_series: MultivariateSeries) -> MultivariateSeries:
    """Return 14 channels per device: the 9 raw axes then pitch, roll, yaw, |acc|, |gyro|.

    Device blocks keep their input order.
    """
    devices = imu_devices(imu_series)
    if not devices:
        raise MissingChannelError("no IMU channels (acc/gyro/mag x/y/z) found")
    names, rows = [], []
    for prefix in devices:
        try:
            raw = np.stack([imu_series.channel(prefix + a) for a in RAW_AXES])
        except KeyError as exc:
            raise MissingChannelError(f"device {prefix.rstrip('_') or '<bare>'} lacks channel {exc}") from None
        acc, gyro, mag = raw[0:3], raw[3:6], raw[6:9]
        pitch, roll, yaw = orientation(acc, mag)
        rows.extend(raw)
        rows.extend([pitch, roll, yaw,
                     np.sqrt((acc * acc).sum(axis=0)),
                     np.sqrt((gyro * gyro).sum(axis=0))])
        names.extend(prefix + a for a in RAW_AXES)
        names.extend(prefix + d for d in DERIVED)
    return MultivariateSeries(tuple(names), np.stack(rows), imu_series.sample_rate_hz)
