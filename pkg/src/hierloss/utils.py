# -*- coding: utf-8 -*-

# Hierloss: hierarchy-aware classification toolkit
#
# Copyright (C) 2026  The Hierloss contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
# Any modifications to this file must keep this entire header intact.

"""
Common reusable utilities.
"""

import io
import os
import json
import time
import logging

logger = logging.getLogger(__name__)


class HierlossError(Exception):
    """
    Base class of all errors raised by hierloss modules
    """
    pass


def errorPayload(exc, command=None):
    """Machine-readable description of a failed command

    Arguments:
        exc {Exception} -- the error that ended the command

    Keyword Arguments:
        command {str} -- CLI subcommand name (default: {None})

    Returns:
        dict -- JSON-serializable error payload
    """
    return {
        "status": "error",
        "command": command,
        "error": type(exc).__name__,
        "message": str(exc),
    }


def dumpJson(obj):
    """Serialize with a stable layout so equal objects give equal bytes"""
    return json.dumps(obj, indent=2, sort_keys=True,
                      ensure_ascii=False, allow_nan=False) + "\n"


def writeJson(path, obj):
    with io.open(path, "w", encoding="utf-8") as f:
        f.write(dumpJson(obj))


def writeText(path, text):
    with io.open(path, "w", encoding="utf-8") as f:
        f.write(text if text.endswith("\n") else text + "\n")


def makeRunDir(out_dir, seed, stamp=None):
    """Create the output directory of a single invocation

    Directory names follow <out_dir>/<YYYYmmdd-HHMMSS>-seed<N>; a numeric
    suffix is appended if the name is already taken.

    Arguments:
        out_dir {str} -- parent directory, created if missing
        seed {int} -- run seed

    Keyword Arguments:
        stamp {str} -- timestamp override (default: {None})

    Returns:
        str -- path of the new, empty directory
    """
    stamp = stamp or time.strftime("%Y%m%d-%H%M%S")
    base = os.path.join(out_dir, "{}-seed{}".format(stamp, seed))
    path = base
    nr = 1
    while os.path.exists(path):
        nr += 1
        path = "{}-{}".format(base, nr)
    os.makedirs(path)
    return path


def parseNumberList(text, kind=float):
    """Parse "0,0.5,1" style command line lists"""
    if isinstance(text, (list, tuple)):
        return [kind(item) for item in text]
    items = [item.strip() for item in str(text).split(",")]
    return [kind(item) for item in items if item]
