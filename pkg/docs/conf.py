# Configuration file for the Sphinx documentation builder.
#
# For the full list of options see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('../'))

# -- Project information -----------------------------------------------------

project = 'tasepfan'
copyright = u'2024, the tasepfan developers'
author = u'the tasepfan developers'
version = release = '1.0.0'

# -- General configuration ---------------------------------------------------

master_doc = 'index'

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.mathjax']
# the kernels are compiled on import; documentation builds do not need numba
autodoc_mock_imports = ['numba']
autodoc_member_order = 'bysource'

pygments_style = 'sphinx'

templates_path = ['_templates']

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# -- Options for HTML output -------------------------------------------------

html_theme = 'bizstyle'
html_theme_options = {
}
html_sidebars = {
   '**': ['globaltoc.html', 'searchbox.html'],
}
html_static_path = ['_static']
