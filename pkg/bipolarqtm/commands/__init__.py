# This file makes 'commands' a Python package
