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
Run configuration management
"""

import io
import json
import logging
from copy import deepcopy

from packaging import version

from ..utils import HierlossError
from .utils import (deepMergeDicts, getNestedValue, setNestedValue,
                    hasNestedKey, unknownKeys, decodeValue)

logger = logging.getLogger(__name__)


class ConfigError(HierlossError):
    """
    Thrown whenever a config-specific exception occurs
    """
    pass


class ConfigManager(object):

    """
    Generic configuration manager for hierloss runs

    Holds a nested dictionary of defaults (which doubles as the schema)
    and the user values merged on top of them. Supported sources:

    source      location            notes
    ==========================================================================
    defaults    config_dict         always present, defines valid keys
    --------------------------------------------------------------------------
    file        JSON file           merged over defaults, upgraded if its
                                    "version" is older than the defaults'
    --------------------------------------------------------------------------
    overrides   key=value strings   dotted keys, validated against defaults

    """

    def __init__(self, config_dict, conf_path=None):
        """
        Initialize a new config manager object with the provided defaults

        Arguments:
            config_dict {dict} -- Nested dictionary of default values. Every
                                  key a user may set has to be present.

        Keyword Arguments:
            conf_path {str} -- JSON file to load right away (default: {None})
        """
        self._defaults = deepcopy(config_dict)
        self._config = deepcopy(config_dict)
        self._sources = ["defaults"]
        if conf_path:
            self.load(conf_path)

    # Dictionary interface
    ######################################################################

    def __getitem__(self, name):
        """
        Implements evaluation of self[section_name]

        Dotted names ("loss.tau") resolve nested values.
        """
        keys = tuple(name.split("."))
        if not hasNestedKey(self._config, keys):
            raise ConfigError("Unknown config key: " + name)
        return getNestedValue(self._config, keys)

    def __setitem__(self, name, value):
        """
        Implements assignment of self[key_name], with validation
        """
        self.override(name, value)

    def __contains__(self, name):
        return hasNestedKey(self._config, tuple(name.split(".")))

    def __str__(self):
        """
        Returns printable representation of the resolved config values.
        """
        return self._config.__str__()

    # Regular interface
    ######################################################################

    def load(self, path):
        """
        Merge config values from a JSON file into the ConfigManager.

        Arguments:
            path {str} -- Path to JSON config file

        Raises:
            ConfigError -- file missing, not valid JSON, or containing
                           keys that do not exist in the defaults
        """
        try:
            with io.open(path, encoding="utf-8") as f:
                incoming = json.load(f)
        except (IOError, OSError) as e:
            raise ConfigError("Config file could not be read: " + str(e))
        except ValueError as e:
            raise ConfigError("Config file is not valid JSON: " + str(e))
        if not isinstance(incoming, dict):
            raise ConfigError("Config file must contain a JSON object")
        self.update(incoming)
        self._sources.append(str(path))

    def update(self, incoming):
        """
        Merge a (partial) nested dictionary of values into the config

        Arguments:
            incoming {dict} -- Nested dictionary of values

        Raises:
            ConfigError -- on keys that are not part of the defaults
        """
        unknown = unknownKeys(self._defaults, incoming)
        if unknown:
            raise ConfigError("Unknown config keys: " + ", ".join(unknown))
        incoming = self._maybeUpgrade(deepcopy(incoming))
        for dotted, value in list(self._iterLeaves(incoming)):
            setNestedValue(incoming, tuple(dotted.split(".")),
                           self._checkType(dotted, value))
        deepMergeDicts(self._config, incoming)

    def override(self, name, value):
        """
        Set a single dotted key after validating it against the defaults

        Arguments:
            name {str} -- Dotted key, e.g. "loss.lambda1"
            value {object} -- New value

        Raises:
            ConfigError -- unknown key or incompatible value type
        """
        keys = tuple(name.split("."))
        if not hasNestedKey(self._defaults, keys):
            raise ConfigError("Unknown config key: " + name)
        value = self._checkType(name, value)
        setNestedValue(self._config, keys, value)

    def applyOverrides(self, pairs):
        """
        Apply a list of "key=value" strings in order

        Arguments:
            pairs {list} -- e.g. ["loss.lambda1=2", "train.epochs=10"]
        """
        for pair in pairs or ():
            name, sep, text = pair.partition("=")
            if not sep or not name.strip():
                raise ConfigError(
                    "Overrides must look like key=value: " + pair)
            self.override(name.strip(), decodeValue(text.strip()))
            self._sources.append(pair)

    def save(self, path):
        """
        Write the resolved config to disk (sorted keys, stable layout)

        Arguments:
            path {str} -- Output file path
        """
        with io.open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    def dumps(self):
        """Serialized resolved config, identical for identical values"""
        return json.dumps(self._config, indent=2, sort_keys=True,
                          ensure_ascii=False) + "\n"

    @property
    def all(self):
        """
        Returns a copy of the resolved config values.

        Returns:
            dict -- Dictionary of all config values
        """
        return deepcopy(self._config)

    @property
    def defaults(self):
        """
        Returns a copy of the default config values.

        Returns:
            dict -- Dictionary of all default config values
        """
        return deepcopy(self._defaults)

    @property
    def sources(self):
        """Names of the sources merged so far, in application order"""
        return list(self._sources)

    def restoreDefaults(self):
        """
        Restore all config values to the defaults
        """
        self._config = deepcopy(self._defaults)
        self._sources = ["defaults"]

    # General helper methods
    ######################################################################

    def _maybeUpgrade(self, incoming):
        """
        Handle configs written by older releases

        Missing keys are filled in from the defaults by the merge itself;
        here we only log the upgrade and bump the stored version.
        """
        default_version = self._defaults.get("version")
        if default_version is None or "version" not in incoming:
            return incoming
        dict_version = str(incoming.get("version") or "0.0.0")
        try:
            outdated = (version.parse(dict_version) <
                        version.parse(str(default_version)))
        except version.InvalidVersion:
            raise ConfigError("Invalid config version: " + dict_version)
        if outdated:
            logger.info("Upgrading config from version %s to %s",
                        dict_version, default_version)
            incoming["version"] = default_version
        return incoming

    def _iterLeaves(self, obj, prefix=""):
        for key, value in obj.items():
            dotted = prefix + "." + key if prefix else key
            default = getNestedValue(self._defaults, tuple(dotted.split(".")))
            if isinstance(value, dict) and isinstance(default, dict) \
                    and default:
                for item in self._iterLeaves(value, dotted):
                    yield item
            else:
                yield dotted, value

    def _checkType(self, name, value):
        """
        Validate a value against the type of its default

        int -> float promotion is allowed, None defaults accept anything.

        Returns:
            object -- the (possibly promoted) value

        Raises:
            ConfigError -- on type mismatch
        """
        default = getNestedValue(self._defaults, tuple(name.split(".")))
        if default is None or value is None:
            return value
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
        elif isinstance(default, float):
            if isinstance(value, (int, float)) and \
                    not isinstance(value, bool):
                return float(value)
        elif isinstance(default, int):
            if isinstance(value, int) and not isinstance(value, bool):
                return value
        elif isinstance(default, type(value)):
            return value
        raise ConfigError(
            "Config key '{}' expects {}, got {!r}".format(
                name, type(default).__name__, value))
