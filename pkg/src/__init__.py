# Measurement heat-flow simulator - Source modules
