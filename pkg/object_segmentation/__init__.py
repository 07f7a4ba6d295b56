# Object segmentation module
