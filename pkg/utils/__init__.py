"""
Utility Helpers Package
Numerical invariant checks, report formatting and the ordered thread-pool map.
"""
