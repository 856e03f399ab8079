# Command line interface