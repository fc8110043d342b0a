"""! @brief Writers for the data files produced by the scenarios. """
##
# @file Export.py
#
# @brief CSV tables (RFC-4180, shortest round-trip floats), JSON reports and
#        the "QNDM" binary dump of multimode snapshots.
#
#        QNDM layout, all little endian:
#          4 bytes   magic b"QNDM"
#          uint32    format version
#          uint32    number of axes (1 or 2)
#          per axis: float64 z_min, float64 z_max, uint32 n
#          float64   time
#          uint32    number of fields
#          per field: uint32 number of axes used, then n_1 * ... complex128 values
#                     stored as (re, im) float64 pairs, row major
#
import os
import csv
import json
import math
import struct
import logging

import numpy as np

from Errors import QndError
from Utils import format_value

logger = logging.getLogger(__name__)

QNDM_MAGIC = b"QNDM"
QNDM_VERSION = 1


class ExportError(QndError):
    """! Malformed or unreadable data file """


def ensure_dir(path):
    """! Creates the output directory if it is missing
    """
    os.makedirs(path, exist_ok=True)
    return path


def write_csv(path, header, rows):
    """! Writes one header line and the rows
    @return Number of data rows written
    """
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug("Wrote %i rows to '%s'" % (count, path))
    return count


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return {"re": _jsonable(value.real), "im": _jsonable(value.imag)}
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path, data):
    """! Writes a JSON document with sorted keys
    """
    with open(path, "w") as f:
        json.dump(_jsonable(data), f, sort_keys=True, indent=2, allow_nan=False)
        f.write("\n")
    logger.debug("Wrote '%s'" % (path,))


def write_wigner_csv(path, wmap):
    return write_csv(path, ("x", "p", "W"), wmap.rows())


def write_snapshot_csv(path, phi_ps):
    """! (z_p, z_s, Re phi, Im phi, |phi|^2, arg phi) rows of a two-photon field
    """
    z = phi_ps.grid.points
    values = phi_ps.values

    def rows():
        for i, zp in enumerate(z):
            for j, zs in enumerate(z):
                v = complex(values[i, j])
                yield zp, zs, v.real, v.imag, abs(v) ** 2, math.atan2(v.imag, v.real)

    return write_csv(path, ("z_p", "z_s", "re", "im", "abs2", "arg"), rows())


def write_auxiliary_csv(path, phi_a):
    z = phi_a.grid.points
    rows = ((za, v.real, v.imag, abs(v) ** 2) for za, v in zip(z, (complex(x) for x in phi_a.values)))
    return write_csv(path, ("z_a", "re", "im", "abs2"), rows)


def write_phase_csv(path, grid, phase):
    """! Masked phase map, NaN marks points below the amplitude floor
    """
    z = grid.points
    rows = ((zp, zs, phase[i, j]) for i, zp in enumerate(z) for j, zs in enumerate(z))
    return write_csv(path, ("z_p", "z_s", "phase"), rows)


def write_qndm(path, grid, time, fields):
    """! Writes complex fields on a common grid as a QNDM dump
    @param grid    Grid1D shared by all axes
    @param time    Snapshot time
    @param fields  List of complex arrays with one or two axes
    """
    ndim = max(np.ndim(f) for f in fields)
    with open(path, "wb") as f:
        f.write(QNDM_MAGIC)
        f.write(struct.pack("<II", QNDM_VERSION, ndim))
        for _ in range(ndim):
            f.write(struct.pack("<ddI", grid.z_min, grid.z_max, grid.n))
        f.write(struct.pack("<dI", float(time), len(fields)))
        for values in fields:
            values = np.ascontiguousarray(values, dtype="<c16")
            if any(s != grid.n for s in values.shape):
                raise ExportError("Field of shape %s does not match the %i point grid" % (values.shape, grid.n))
            f.write(struct.pack("<I", values.ndim))
            f.write(values.tobytes(order="C"))
    logger.debug("Wrote %i fields to '%s'" % (len(fields), path))


def _unpack(f, fmt):
    size = struct.calcsize(fmt)
    data = f.read(size)
    if len(data) != size:
        raise ExportError("Unexpected end of QNDM file")
    return struct.unpack(fmt, data)


def read_qndm(path):
    """! Reads a QNDM dump
    @return dict with 'version', 'axes' [(z_min, z_max, n)], 'time' and 'fields'
    """
    with open(path, "rb") as f:
        if f.read(4) != QNDM_MAGIC:
            raise ExportError("'%s' is not a QNDM file" % (path,))
        version, ndim = _unpack(f, "<II")
        if version != QNDM_VERSION:
            raise ExportError("Unsupported QNDM version %i" % (version,))
        axes = [_unpack(f, "<ddI") for _ in range(ndim)]
        time, count = _unpack(f, "<dI")
        fields = []
        n = axes[0][2]
        for _ in range(count):
            (field_ndim,) = _unpack(f, "<I")
            shape = (n,) * field_ndim
            size = int(np.prod(shape)) * 16
            data = f.read(size)
            if len(data) != size:
                raise ExportError("Unexpected end of QNDM file")
            fields.append(np.frombuffer(data, dtype="<c16").reshape(shape).astype(complex))
    return {"version": version, "axes": axes, "time": time, "fields": fields}
