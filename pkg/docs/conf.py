# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys

sys.path.insert(0, os.path.abspath("../"))

from cxflow import __version__  # noqa: E402

# -- Project information -----------------------------------------------------

project = "cxflow"
copyright = "2026, cxflow contributors"
author = "cxflow contributors"
release = __version__

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.coverage",
    "sphinx.ext.napoleon",
    "sphinx.ext.doctest",
    "sphinx_copybutton",
    "enum_tools.autoenum",
]

autodoc_member_order = "bysource"

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# -- Options for HTML output -------------------------------------------------

html_title = "cxflow"
html_theme = "furo"
html_theme_options = {
    "sidebar_hide_name": False,
    "light_css_variables": {
        "color-brand-primary": "#1F6F8B",
        "color-brand-content": "#1F6F8B",
    },
}

pygments_style = "friendly"
pygments_dark_style = "monokai"
