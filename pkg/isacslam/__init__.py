# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import os

from .version import version as __version__  # noqa
from .errors import (IsacSlamError, InvalidGeometryError, InvalidMeasurementError,  # noqa
                     InsufficientDataError, DegenerateFitError, ConfigurationError,
                     ValidationError)
from .scenario import Scenario, parse, emit  # noqa

# checker and helper are part of the top-level namespace
import isacslam.checker  # noqa
import isacslam.helper  # noqa

from typing import Union, Text, IO, Optional, cast

DATA_DIR = os.path.join(os.path.realpath(os.path.dirname(__file__)), 'data')
DEFAULT_SCENARIO = os.path.join(DATA_DIR, 'room.json')


def _load_bytes(f):  # type: (Union[IO[bytes], Text]) -> bytes
    read = getattr(f, 'read', None)
    if callable(read):
        return cast(IO[bytes], f).read()
    with open(cast(Text, f), 'rb') as stream:
        return stream.read()


def _save_bytes(content, f):  # type: (bytes, Union[IO[bytes], Text]) -> None
    write = getattr(f, 'write', None)
    if callable(write):
        cast(IO[bytes], f).write(content)
        return
    with open(cast(Text, f), 'wb') as stream:
        stream.write(content)


def load_scenario(f=None):  # type: (Optional[Union[IO[bytes], Text]]) -> Scenario
    '''
    Loads a scenario from a file path or readable file object.
    Without an argument the bundled room scenario is loaded.

    The raw bytes are kept on the scenario so a run can echo them unchanged.
    '''
    if f is None:
        f = DEFAULT_SCENARIO
    return parse(_load_bytes(f))


def save_scenario(scenario, f):  # type: (Union[Scenario, bytes], Union[IO[bytes], Text]) -> None
    '''
    Saves a scenario (or already serialized bytes) to a path or writable file object.
    '''
    if isinstance(scenario, bytes):
        content = scenario
    else:
        content = emit(scenario)
    _save_bytes(content, f)
