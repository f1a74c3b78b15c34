#!/usr/bin/env python
# -*- coding: utf-8 -*-
from setuptools import setup, find_packages


def get_requires():
    def _filter(requires):
        return [req.strip() for req in requires if req.strip()]

    with open("requirements.txt", "r") as fh:
        return _filter(fh.readlines())


with open("README.md") as fh:
    long_description = fh.read()


setup(
    name='bee-tiny',
    version='0.1.0',
    description='Weakly-supervised batch exploration in a tabletop simulator',
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(),
    license='MIT',
    python_requires='>=3.8',
    install_requires=get_requires(),
    entry_points={
        "console_scripts": [
            "bee-tiny = beetiny.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ]
)
