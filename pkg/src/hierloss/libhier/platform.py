# -*- coding: utf-8 -*-

# Libhier: helper library for Hierloss
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
Worker-pool sizing from the environment
"""

import os
import logging

from ..consts import ENV_THREADS

__all__ = ["workerCount"]

logger = logging.getLogger(__name__)


def workerCount(requested=None):
    """Determine how many worker processes may be used

    The HIERLOSS_THREADS environment variable caps the result. Without
    either a request or the variable, a single worker is used so that
    runs stay reproducible by default.

    Keyword Arguments:
        requested {int} -- worker count asked for by the caller
                           (default: {None})

    Returns:
        int -- number of workers, at least 1
    """
    cap = None
    env_value = os.environ.get(ENV_THREADS)
    if env_value:
        try:
            cap = max(1, int(env_value))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r",
                           ENV_THREADS, env_value)
    if requested is None or requested < 1:
        requested = cap if cap is not None else 1
    if cap is not None:
        requested = min(requested, cap)
    return max(1, requested)
