#!/usr/bin/env python

from setuptools import find_packages, setup
VERSION = "0.1.0"

setup(
    name='sticky-flow',
    version=VERSION,
    description=("Exact event-driven sticky particle simulator and "
                 "verification harness for pressureless gas dynamics"),
    packages=find_packages(),
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
        'pydantic>=2.0',
    ],
    extras_require={
        'statsd': ['statsd'],
        'test': ['hypothesis'],
    },
    package_data={
        'sticky_flow': ['fixtures/*.json'],
    },
    include_package_data=True,
    entry_points={
        'console_scripts': [
            'sticky-flow = sticky_flow.cli:main',
        ],
    },
)
