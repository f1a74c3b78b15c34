# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath('.'))))
from beetiny import __version__

project = 'BEE Tiny'
copyright = '2026, BEE Tiny developers'
author = 'BEE Tiny developers'
version = __version__
release = __version__

extensions = [
    'sphinx.ext.autodoc',
]
source_suffix = '.rst'
master_doc = 'index'
language = 'en'
exclude_patterns = []

html_theme = 'sphinx_rtd_theme'
