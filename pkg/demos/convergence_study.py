"""
Two-mesh convergence study
==========================

No exact solution is known, so errors compare runs at halved step or mesh
width.  Rates near 2 in time and 4 in space are expected.
"""

import sys

from stgwave.harness import StudyConfig, two_mesh_spatial, two_mesh_temporal, write_rows

###############################################################################
# Temporal study on a fixed 8 -> 32 grid pair.

config = StudyConfig(scheme="stg", case="II", alpha0=(1.5,), N=(32, 64, 128), M_H=(8,), J=4)
write_rows(two_mesh_temporal(config), sys.stdout)

###############################################################################
# Spatial study at fixed N; each row halves both mesh widths.

config = StudyConfig(scheme="stg", case="II", alpha0=(1.5,), N=(64,), M_H=(4, 8, 16), J=4)
write_rows(two_mesh_spatial(config), sys.stdout)

###############################################################################
# The same studies are available from the shell:
#
#   stgwave converge-time --case II --alpha0 1.5 --N 32,64,128 --MH 8 --J 4
