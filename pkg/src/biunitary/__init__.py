"""Bi-unitary connections on bipartite graphs.

Submodules: :mod:`graphs`, :mod:`connections`, :mod:`catops`,
:mod:`flatness`, :mod:`su2k`, :mod:`ade`, :mod:`alpha`, :mod:`strings`
and the command line in :mod:`cli`.
"""
__version__ = "0.1.0"
