# Imaging module
