# SPDX-License-Identifier: Apache-2.0

"""Run reports and their on-disk layout.

One run (preset, seed) writes ``<out>/<preset>/seed-<seed>/`` holding one CSV
per table, ``map.json`` with the final map per mechanism, ``scenario.json``
with the scenario bytes the run was given and ``runtime.json``. Everything
but ``runtime.json`` is a function of (scenario, seed).
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import csv
import io
import json
import math
import os
import re
from collections import OrderedDict

from six import integer_types
from typing import Any, Dict, Iterator, List, Sequence, Text, Tuple

from isacslam.slam_engine import Feature

FLOAT_FORMAT = '%.10g'
SERIES_TABLE = 'series'
SUMMARY_TABLE = 'summary'
SUMMARY_HEADER = ('mechanism', 'metric', 'value')
CONFIG_ECHO = 'scenario.json'
MAP_FILE = 'map.json'
RUNTIME_FILE = 'runtime.json'

_RUN_DIR = re.compile(r'^seed-(\d+)$')


def format_value(v):  # type: (Any) -> Text
    if isinstance(v, bool):
        return 'true' if v else 'false'
    if isinstance(v, integer_types):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return 'nan'
        return FLOAT_FORMAT % v
    if hasattr(v, 'dtype'):
        return format_value(v.item())
    return '{}'.format(v)


def _round(v):  # type: (float) -> float
    return float(FLOAT_FORMAT % v)


def feature_to_dict(f):  # type: (Feature) -> Dict[Text, Any]
    return {
        'id': f.id,
        'kind': f.kind,
        'mean': [_round(v) for v in f.mean],
        'covariance': [[_round(v) for v in row] for row in f.covariance],
        'existence': _round(f.existence),
    }


class RunReport(object):
    """Everything one (preset, seed) run emits."""

    def __init__(self, experiment, seed, config=b''):  # type: (Text, int, bytes) -> None
        self.experiment = experiment
        self.seed = int(seed)
        self.config = config
        self.runtime = 0.0
        self.tables = OrderedDict()  # type: OrderedDict[Text, Tuple[Tuple[Text, ...], List[Sequence[Any]]]]
        self.maps = OrderedDict()  # type: OrderedDict[Text, List[Feature]]

    def add_rows(self, name, header, rows):  # type: (Text, Sequence[Text], Sequence[Sequence[Any]]) -> None
        header = tuple(header)
        if name in self.tables:
            if self.tables[name][0] != header:
                raise ValueError('Table {!r} already has header {}, got {}'.format(
                    name, self.tables[name][0], header))
        else:
            self.tables[name] = (header, [])
        self.tables[name][1].extend(tuple(r) for r in rows)

    def add_series(self, mechanism, rows):  # type: (Text, Sequence[Any]) -> None
        """Adds TrackRow-like rows to the per-epoch series table."""
        if not rows:
            return
        fields = type(rows[0])._fields
        self.add_rows(SERIES_TABLE, ('mechanism',) + tuple(fields), [(mechanism,) + tuple(r) for r in rows])

    def add_summary(self, mechanism, metric, value):  # type: (Text, Text, float) -> None
        self.add_rows(SUMMARY_TABLE, SUMMARY_HEADER, [(mechanism, metric, value)])

    def add_map(self, mechanism, features):  # type: (Text, Sequence[Feature]) -> None
        self.maps[mechanism] = list(features)

    def summary(self):  # type: () -> Dict[Tuple[Text, Text], Any]
        if SUMMARY_TABLE not in self.tables:
            return {}
        return dict(((m, k), v) for m, k, v in self.tables[SUMMARY_TABLE][1])

    def run_dir(self, out_dir):  # type: (Text) -> Text
        return os.path.join(out_dir, self.experiment, 'seed-{}'.format(self.seed))

    def write(self, out_dir):  # type: (Text) -> Text
        path = self.run_dir(out_dir)
        if not os.path.isdir(path):
            os.makedirs(path)
        for name, (header, rows) in self.tables.items():
            with open(os.path.join(path, name + '.csv'), 'wb') as f:
                f.write(table_to_csv(header, rows))
        with open(os.path.join(path, MAP_FILE), 'wb') as f:
            f.write(self.map_bytes())
        with open(os.path.join(path, CONFIG_ECHO), 'wb') as f:
            f.write(self.config)
        with open(os.path.join(path, RUNTIME_FILE), 'w') as fi:
            json.dump({'runtime_seconds': self.runtime}, fi, sort_keys=True)
        return path

    def map_bytes(self):  # type: () -> bytes
        doc = dict((m, [feature_to_dict(f) for f in fs]) for m, fs in self.maps.items())
        return (json.dumps(doc, sort_keys=True, indent=2) + '\n').encode('utf-8')

    def __repr__(self):  # type: () -> Text
        return 'RunReport({!r}, seed={}, tables={})'.format(self.experiment, self.seed, list(self.tables))


def table_to_csv(header, rows):  # type: (Sequence[Text], Sequence[Sequence[Any]]) -> bytes
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue().encode('utf-8')


def read_table(path):  # type: (Text) -> List[Dict[Text, Text]]
    with io.open(path, 'r', encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


def parse_value(text):  # type: (Text) -> Any
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def iter_runs(in_dir):  # type: (Text) -> Iterator[Tuple[Text, int, Text]]
    """(experiment, seed, run directory) under ``in_dir``, sorted."""
    if not os.path.isdir(in_dir):
        raise IOError('No such directory: {}'.format(in_dir))
    for experiment in sorted(os.listdir(in_dir)):
        exp_dir = os.path.join(in_dir, experiment)
        if not os.path.isdir(exp_dir):
            continue
        runs = []
        for name in os.listdir(exp_dir):
            match = _RUN_DIR.match(name)
            if match and os.path.isdir(os.path.join(exp_dir, name)):
                runs.append((int(match.group(1)), os.path.join(exp_dir, name)))
        for seed, path in sorted(runs):
            yield experiment, seed, path


def tidy_rows(in_dir, metrics=('error', 'ospa')):
    # type: (Text, Sequence[Text]) -> List[Tuple[Text, Text, int, int, int, Text, Any]]
    """Long-format rows (experiment, mechanism, seed, ue_id, epoch, metric, value).

    Read from the series table of every run under ``in_dir``.
    """
    out = []
    for experiment, seed, path in iter_runs(in_dir):
        series = os.path.join(path, SERIES_TABLE + '.csv')
        if not os.path.exists(series):
            continue
        for row in read_table(series):
            for metric in metrics:
                if metric in row:
                    out.append((experiment, row['mechanism'], seed, int(row['ue_id']), int(row['epoch']),
                                metric, parse_value(row[metric])))
    return out


def collect_summaries(in_dir):  # type: (Text) -> List[Tuple[Text, Text, Text, int, Any]]
    """(experiment, mechanism, metric, seed, value) of every run under ``in_dir``."""
    out = []
    for experiment, seed, path in iter_runs(in_dir):
        summary = os.path.join(path, SUMMARY_TABLE + '.csv')
        if not os.path.exists(summary):
            continue
        for row in read_table(summary):
            out.append((experiment, row['mechanism'], row['metric'], seed, parse_value(row['value'])))
    return out
