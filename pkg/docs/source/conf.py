# -*- coding: utf-8 -*-
#
# Mixmonster documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'Mixmonster'
copyright = '2017, The Mixmonster developers'
author = 'The Mixmonster developers'

# Kept in step with mixmonster.VERSION
version = '0.1.0'
release = '0.1.0'

exclude_patterns = []
pygments_style = 'sphinx'
autodoc_member_order = 'bysource'

import sphinx_rtd_theme
html_theme = "sphinx_rtd_theme"
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_static_path = ['_static']
htmlhelp_basename = 'Mixmonsterdoc'

man_pages = [
    (master_doc, 'mixmonster', 'Mixmonster Documentation', [author], 1)
]
