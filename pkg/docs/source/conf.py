# Sphinx configuration of the it2cfnn documentation.

import sys
from pathlib import Path

import toml

DOCS_PATH = Path(__file__).parent
ROOT_PATH = DOCS_PATH.parent.parent
sys.path.insert(0, str(ROOT_PATH))

POETRY = toml.load(ROOT_PATH / 'pyproject.toml')['tool']['poetry']

project = POETRY['name']
author = POETRY['authors'][0]
copyright = f"2026, {author}"
release = POETRY['version']
version = '.'.join(release.split('.')[:2])

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.autosectionlabel',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx_copybutton',
    'sphinx_design',
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
    'pydantic': ('https://docs.pydantic.dev/latest/', None),
}

# array aliases are shown by name in signatures
autodoc_type_aliases = {
    'FloatArray': 'it2cfnn.typedefs.FloatArray',
    'IntArray': 'it2cfnn.typedefs.IntArray',
    'ArrayLike': 'it2cfnn.utils.ArrayLike',
}
autodoc_typehints = 'description'
autodoc_typehints_format = 'short'
autodoc_member_order = 'bysource'
autodoc_default_options = {
    'members': True,
    'show-inheritance': True,
}

autosectionlabel_prefix_document = True

# strip console prompts on copy
copybutton_prompt_text = r'\$ '
copybutton_prompt_is_regexp = True

exclude_patterns = []

html_theme = 'furo'
html_title = f"{project} {release}"
html_short_title = project
html_theme_options = {
    'navigation_with_keys': True,
    'sidebar_hide_name': False,
}
