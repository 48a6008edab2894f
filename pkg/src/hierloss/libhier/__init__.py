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
Libhier: A helper library for Hierloss

Provides the configuration manager, nested-dictionary utilities, and
platform information shared by the rest of the package.

This module is the package entry-point.
"""

__all__ = [
    "configmanager", "platform", "utils"
]
