# Trajectory module
