# -*- coding: utf-8 -*-

import os

from setuptools import find_packages, setup

# HACK READTHEDOCS (find a better solution)
if '/home/docs/checkouts/readthedocs' in os.getcwd():
    requires = []
else:
    requires = ['numpy', 'scipy']

setup(name='systraj',
      version='0.1.0',
      description='Learning controlled nonlinear dynamical systems from a single trajectory',
      classifiers=[
        "Development Status :: Beta",
        "Environment :: Console",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Mathematics",
      ],
      license='MIT',
      keywords='system identification nonlinear dynamics gradient descent control',
      packages=find_packages(exclude=['tests', 'doc']),
      package_data={'systraj': ['presets/*.cfg']},
      zip_safe=False,
      test_suite='tests',
      install_requires=requires,
      entry_points={
          'console_scripts': ['systraj=systraj.cli:main'],
      },
      )
