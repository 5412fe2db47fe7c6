"""Formula rewriting and constraint separation ahead of LLM queries."""

from .components import Component, component_script, extract_constraints, ground_residue, separate_components
from .rewrite import expand_definitions, rewrite_formula, simplify, split_conjuncts
from .unionfind import UnionFind
