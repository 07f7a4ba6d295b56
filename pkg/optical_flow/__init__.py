# Optical flow module
