#!/usr/bin/env python

# SPDX-License-Identifier: Apache-2.0

import os
import subprocess
import sys

ROOT = os.path.realpath(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def main():  # type: () -> None
    # --no-site-packages keeps the report to isacslam and tools
    returncode = subprocess.call(['mypy', 'isacslam', 'tools', '--no-site-packages'], cwd=ROOT)
    sys.exit(1 if returncode else 0)


if __name__ == '__main__':
    main()
