# Results module
