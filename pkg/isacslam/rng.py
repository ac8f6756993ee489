# SPDX-License-Identifier: Apache-2.0

"""Seeded random streams.

Every consumer of randomness draws from its own counter-based generator keyed
by (master seed, ue id, epoch, purpose). Two runs with the same keys see the
same numbers no matter how work is split across processes.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import zlib

import numpy as np  # type: ignore
from typing import Text


def purpose_tag(purpose):  # type: (Text) -> int
    return zlib.crc32(purpose.encode('utf-8')) & 0xffffffff


def make_rng(master_seed, ue_id=0, epoch=0, purpose='default'):  # type: (int, int, int, Text) -> np.random.Generator
    if master_seed < 0 or ue_id < 0 or epoch < 0:
        raise ValueError('Stream keys must be non-negative, got ({}, {}, {})'.format(
            master_seed, ue_id, epoch))
    seq = np.random.SeedSequence([int(master_seed), int(ue_id), int(epoch), purpose_tag(purpose)])
    return np.random.Generator(np.random.Philox(seq))


class RngStreams(object):
    """Factory bound to one master seed."""

    def __init__(self, master_seed):  # type: (int) -> None
        self.master_seed = int(master_seed)

    def get(self, ue_id, epoch, purpose):  # type: (int, int, Text) -> np.random.Generator
        return make_rng(self.master_seed, ue_id, epoch, purpose)

    def __repr__(self):  # type: () -> Text
        return 'RngStreams(master_seed={})'.format(self.master_seed)
