# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

from typing import List, Text, Optional


class IsacSlamError(Exception):
    pass


class InvalidGeometryError(IsacSlamError, ValueError):
    pass


class InvalidMeasurementError(IsacSlamError, ValueError):
    pass


class InsufficientDataError(IsacSlamError, ValueError):
    pass


class DegenerateFitError(IsacSlamError, ValueError):
    pass


class ConfigurationError(IsacSlamError, ValueError):
    pass


class ValidationError(IsacSlamError, ValueError):
    """Raised when a scenario violates one or more constraints.

    All violations are collected before raising; ``violations`` holds one
    human-readable line per problem.
    """

    def __init__(self, violations, message=None):  # type: (List[Text], Optional[Text]) -> None
        self.violations = list(violations)
        if message is None:
            message = '{} violation(s):\n  {}'.format(
                len(self.violations), '\n  '.join(self.violations))
        super(ValidationError, self).__init__(message)
