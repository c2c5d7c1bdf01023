# -*- coding: utf-8 -*-

__version__ = '1.0.0'

__all__ = ['cli',
           'config',
           'experiments',
           'harris',
           'hydro',
           'lpp',
           'server',
           'tasep',
           'utilities']

# -----------------------------------------------------------------------------
# eof
