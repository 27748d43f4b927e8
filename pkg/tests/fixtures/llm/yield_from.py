def chain(first, second):
    yield from first
    yield from second
    return len(first) + len(second)
