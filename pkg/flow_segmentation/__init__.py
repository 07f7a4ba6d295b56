# Flow segmentation module
