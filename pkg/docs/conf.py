#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# hier_deconv documentation build configuration file.

import os
import sys
sys.path.insert(0, os.path.join(
    os.path.dirname(os.path.abspath(__file__)), '..', 'src'))

from hier_deconv import __version__  # noqa: E402


def skip(app, what, name, obj, skip, options):
    if name == "__init__":
        return False
    return skip


def setup(app):
    app.connect("autodoc-skip-member", skip)


# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx_autodoc_typehints',
    ]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'hier_deconv'
copyright = '2024, hier_deconv developers'
author = 'hier_deconv developers'

version = __version__
release = __version__

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'


# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = []
htmlhelp_basename = 'hier_deconvdoc'


# -- Options for LaTeX and manual page output -----------------------------

latex_documents = [
    (master_doc, 'hier_deconv.tex', 'hier\\_deconv Documentation',
     author, 'manual'),
]

man_pages = [
    (master_doc, 'hier_deconv', 'hier_deconv Documentation',
     [author], 1)
]


intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'marshmallow': ('https://marshmallow.readthedocs.io/en/stable/', None),
}

autodoc_default_options = {'members': True}
