import sys  # noqa: F401

listing = []  # type: list
# TODO: handle unicode input later
