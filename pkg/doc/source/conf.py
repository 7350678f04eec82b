# -*- coding: utf-8 -*-
#
# systraj documentation build configuration file.

import os
import sys

import sphinx_rtd_theme
from mock import Mock as MagicMock

sys.path.insert(0, os.path.abspath('../..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.todo',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'systraj'
copyright = u'2026, systraj developers'
author = u'systraj developers'
version = u'0.1.0'
release = u'0.1.0'

language = None
exclude_patterns = []
pygments_style = 'sphinx'
todo_include_todos = True

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_title = u'systraj ' + release
html_static_path = ['_static']
htmlhelp_basename = 'systrajdoc'

latex_documents = [
    (master_doc, 'systraj.tex', u'systraj Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'systraj', u'systraj Documentation', [author], 1)
]


# Mocks for read-the-docs
class Mock(MagicMock):
    @classmethod
    def __getattr__(cls, name):
            return Mock()


MOCK_MODULES = ['numpy', 'scipy', 'scipy.linalg', 'scipy.special', 'scipy.stats']
sys.modules.update((mod_name, Mock()) for mod_name in MOCK_MODULES)
