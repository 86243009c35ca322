# Workflows package
from .run_graph import MemberResult, build_run_graph, member_seed, run_members

__all__ = ['MemberResult', 'build_run_graph', 'member_seed', 'run_members']
