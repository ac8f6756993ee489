# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import argparse
import json
import logging
import math
import os
import sys
from collections import OrderedDict

import numpy as np  # type: ignore
from tabulate import tabulate  # type: ignore
from typing import Any, Dict, List, Optional, Sequence, Text, Tuple

from isacslam import DEFAULT_SCENARIO, load_scenario
from isacslam.checker import validate
from isacslam.errors import IsacSlamError
from isacslam.metrics import mospa
from isacslam.presets import PRESETS, run_experiment
from isacslam.report import collect_summaries, table_to_csv, tidy_rows

logger = logging.getLogger('isacslam')

TIDY_HEADER = ('experiment', 'mechanism', 'seed', 'ue_id', 'epoch', 'metric', 'value')
METRICS_HEADER = ('experiment', 'mechanism', 'metric', 'seeds', 'mean', 'std')
SERIES_METRICS_HEADER = ('experiment', 'mechanism', 'ue_id', 'epoch', 'seeds', 'mae', 'mospa')


def _print_violations(violations):  # type: (Sequence[Text]) -> int
    print(json.dumps({'ok': False, 'violations': list(violations)}, indent=2, sort_keys=True))
    return 1


def _load(path):  # type: (Optional[Text]) -> Tuple[Any, List[Text]]
    try:
        return load_scenario(path or DEFAULT_SCENARIO), []
    except (IOError, OSError) as e:
        return None, ['scenario: cannot read {}: {}'.format(path, e)]
    except IsacSlamError as e:
        return None, ['scenario: {}'.format(e)]


def validate_scenario(args):  # type: (argparse.Namespace) -> int
    scenario, violations = _load(args.scenario)
    if scenario is not None:
        violations = validate(scenario)
    if violations:
        return _print_violations(violations)
    print('ok')
    return 0


def run(args):  # type: (argparse.Namespace) -> int
    scenario, violations = _load(args.scenario)
    if scenario is None:
        return _print_violations(violations)
    violations = validate(scenario)
    if args.seeds is not None and args.seeds < 1:
        violations.append('--seeds: must be >= 1, got {}'.format(args.seeds))
    if violations:
        return _print_violations(violations)
    reports = run_experiment(scenario, args.preset, scenario.seeds(args.seeds), args.jobs)
    for report in reports:
        path = report.write(args.out)
        logger.info('wrote %s', path)
    print('{} run(s) of {} written to {}'.format(len(reports), args.preset, args.out))
    return 0


def aggregate(summaries):  # type: (Sequence[Tuple[Text, Text, Text, int, Any]]) -> List[Tuple[Any, ...]]
    """Mean and standard deviation over seeds per (experiment, mechanism, metric)."""
    groups = OrderedDict()  # type: OrderedDict[Tuple[Text, Text, Text], List[float]]
    for experiment, mechanism, metric, _, value in sorted(summaries, key=lambda s: (s[0], s[1], s[2], s[3])):
        if isinstance(value, (int, float)):
            groups.setdefault((experiment, mechanism, metric), []).append(float(value))
    rows = []
    for (experiment, mechanism, metric), values in groups.items():
        finite = [v for v in values if not math.isnan(v)]
        mean = float(np.mean(finite)) if finite else float('nan')
        std = float(np.std(finite)) if finite else float('nan')
        rows.append((experiment, mechanism, metric, len(values), mean, std))
    return rows


def aggregate_series(tidy):  # type: (Sequence[Tuple[Any, ...]]) -> List[Tuple[Any, ...]]
    """Per-epoch MAE and MOSPA over seeds per (experiment, mechanism, ue).

    Only epochs present in every seed's error and OSPA series are kept.
    """
    groups = OrderedDict()  # type: OrderedDict[Tuple[Text, Text, int], Dict[Text, Dict[int, Dict[int, float]]]]
    for experiment, mechanism, seed, ue_id, epoch, metric, value in sorted(tidy, key=lambda r: r[:6]):
        group = groups.setdefault((experiment, mechanism, ue_id), {'error': {}, 'ospa': {}})
        if metric in group:
            group[metric].setdefault(seed, {})[epoch] = float(value)
    rows = []
    for (experiment, mechanism, ue_id), group in groups.items():
        if not group['error'] or not group['ospa']:
            continue
        runs = list(group['error'].values()) + list(group['ospa'].values())
        epochs = sorted(set.intersection(*(set(r) for r in runs)))
        if not epochs:
            logger.warning('No common epochs for %s/%s ue %s', experiment, mechanism, ue_id)
            continue
        errors = [[r[e] for e in epochs] for _, r in sorted(group['error'].items())]
        mae = np.mean(np.array(errors, dtype=np.float64), axis=0)
        mean_ospa = mospa([[r[e] for e in epochs] for _, r in sorted(group['ospa'].items())])
        for k, epoch in enumerate(epochs):
            rows.append((experiment, mechanism, ue_id, epoch, len(errors), float(mae[k]), mean_ospa[k]))
    return rows


def metrics(args):  # type: (argparse.Namespace) -> int
    rows = aggregate(collect_summaries(args.input))
    series = aggregate_series(tidy_rows(args.input, ('error', 'ospa')))
    if not rows and not series:
        logger.warning('No run summaries under %s', args.input)
        return 1
    if rows:
        print(tabulate(rows, headers=METRICS_HEADER, floatfmt='.4g'))
        with open(os.path.join(args.input, 'metrics.csv'), 'wb') as f:
            f.write(table_to_csv(METRICS_HEADER, rows))
    if series:
        path = os.path.join(args.input, 'series_metrics.csv')
        with open(path, 'wb') as f:
            f.write(table_to_csv(SERIES_METRICS_HEADER, series))
        logger.info('wrote %s', path)
    return 0


def plotdata(args):  # type: (argparse.Namespace) -> int
    rows = tidy_rows(args.input, args.metric or ('error', 'ospa', 'covariance_trace', 'n_features'))
    content = table_to_csv(TIDY_HEADER, rows)
    if args.output:
        with open(args.output, 'wb') as f:
            f.write(content)
    else:
        out = getattr(sys.stdout, 'buffer', None)
        if out is not None:
            out.write(content)
        else:
            sys.stdout.write(content.decode('utf-8'))
    return 0


def parse_args(argv=None):  # type: (Optional[Sequence[Text]]) -> argparse.Namespace
    parser = argparse.ArgumentParser('isacslam')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for per-epoch debug output')
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    subparser = subparsers.add_parser('validate', help='check a scenario file')
    subparser.add_argument('scenario', nargs='?', default=None,
                           help='scenario file (default: the bundled room scenario)')
    subparser.set_defaults(func=validate_scenario)

    subparser = subparsers.add_parser('run', help='run an experiment preset')
    subparser.add_argument('--preset', required=True, choices=PRESETS)
    subparser.add_argument('--scenario', default=None,
                           help='scenario file (default: the bundled room scenario)')
    subparser.add_argument('--seeds', type=int, default=None,
                           help='number of seeds (default: from the scenario)')
    subparser.add_argument('--out', required=True, help='output directory')
    subparser.add_argument('-j', '--jobs', type=int, default=1,
                           help='worker processes (default: %(default)s)')
    subparser.set_defaults(func=run)

    subparser = subparsers.add_parser('metrics', help='summarise the runs under a directory')
    subparser.add_argument('--in', dest='input', required=True, help='output directory of `run`')
    subparser.set_defaults(func=metrics)

    subparser = subparsers.add_parser('plotdata', help='emit tidy long-format series')
    subparser.add_argument('--in', dest='input', required=True, help='output directory of `run`')
    subparser.add_argument('-o', '--output', default=None, help='CSV file (default: stdout)')
    subparser.add_argument('--metric', action='append', default=None,
                           help='series column to emit; repeatable')
    subparser.set_defaults(func=plotdata)

    return parser.parse_args(argv)


def main(argv=None):  # type: (Optional[Sequence[Text]]) -> None
    args = parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    sys.exit(args.func(args))


if __name__ == '__main__':
    main()
