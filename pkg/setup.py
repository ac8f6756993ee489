# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import setuptools
import setuptools.command.build_py
import setuptools.command.develop

from collections import namedtuple
import os
import subprocess
import sys
from textwrap import dedent


TOP_DIR = os.path.realpath(os.path.dirname(__file__))
SRC_DIR = os.path.join(TOP_DIR, 'isacslam')
PACKAGE_NAME = 'isacslam'

install_requires = []
setup_requires = []
tests_require = []
extras_require = {}

################################################################################
# Version
################################################################################

try:
    git_version = subprocess.check_output(['git', 'rev-parse', 'HEAD'],
                                          cwd=TOP_DIR).decode('ascii').strip()
except (OSError, subprocess.CalledProcessError):
    git_version = None

with open(os.path.join(TOP_DIR, 'VERSION_NUMBER')) as version_file:
    VersionInfo = namedtuple('VersionInfo', ['version', 'git_version'])(
        version=version_file.read().strip(),
        git_version=git_version
    )

################################################################################
# Customized commands
################################################################################


class IsacSlamCommand(setuptools.Command):
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass


class create_version(IsacSlamCommand):
    def run(self):
        with open(os.path.join(SRC_DIR, 'version.py'), 'w') as f:
            f.write(dedent('''\
            # This file is generated by setup.py. DO NOT EDIT!

            from __future__ import absolute_import
            from __future__ import division
            from __future__ import print_function
            from __future__ import unicode_literals

            version = '{version}'
            git_version = '{git_version}'
            '''.format(**dict(VersionInfo._asdict()))))


class build_py(setuptools.command.build_py.build_py):
    def run(self):
        self.run_command('create_version')
        return setuptools.command.build_py.build_py.run(self)


class develop(setuptools.command.develop.develop):
    def run(self):
        self.run_command('create_version')
        setuptools.command.develop.develop.run(self)


class mypy_type_check(IsacSlamCommand):
    description = 'Run MyPy type checker'

    def run(self):
        """Run command."""
        script = os.path.realpath(os.path.join(os.path.dirname(os.path.abspath(__file__)), "tools/mypy-isacslam.py"))
        returncode = subprocess.call([sys.executable, script])
        sys.exit(returncode)


cmdclass = {
    'create_version': create_version,
    'build_py': build_py,
    'develop': develop,
    'typecheck': mypy_type_check,
}

################################################################################
# Packages
################################################################################

packages = setuptools.find_packages(exclude=['examples', 'examples.*'])

install_requires.extend([
    'numpy>=1.17',
    'scipy>=1.4',
    'six',
    'tabulate',
    'typing-extensions>=3.6.2.1',
])

################################################################################
# Test
################################################################################

setup_requires.append('pytest-runner')
tests_require.append('pytest')

if sys.version_info[0] == 3:
    extras_require['mypy'] = ['mypy']

################################################################################
# Final
################################################################################

setuptools.setup(
    name=PACKAGE_NAME,
    version=VersionInfo.version,
    description="Radio SLAM simulation for integrated sensing and communications",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    cmdclass=cmdclass,
    packages=packages,
    package_data={'isacslam': ['data/*.json']},
    license='Apache License v2.0',
    include_package_data=True,
    install_requires=install_requires,
    setup_requires=setup_requires,
    tests_require=tests_require,
    extras_require=extras_require,
    entry_points={
        'console_scripts': [
            'isacslam = isacslam.bin.cli:main',
            'check-scenario = isacslam.bin.checker:check_scenario',
        ]
    },
)
