#!/usr/bin/env python

# This file is part of photonlink.

from photonlink import __version__
import os

from setuptools import setup


def open_file(fname):
    return open(os.path.join(os.path.dirname(__file__), fname))


setup(
    name='photonlink',
    version=__version__,
    packages=['photonlink'],
    python_requires='>=3.9',
    install_requires=['numpy>=1.22', 'scipy>=1.8'],
    extras_require={'progress': ['tqdm>=4.0']},
    entry_points={'console_scripts': ['photonlink = photonlink.cli:main']},
    license="GPLv2",
    classifiers=[
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v2 (GPLv2)',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering',
    ],
    description='Photon-counting free-space optical link simulator and GLRT sequence detectors',
    long_description=open_file('README.rst').read(),
    zip_safe=True,
)
