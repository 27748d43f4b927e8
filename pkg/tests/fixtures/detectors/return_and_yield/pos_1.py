def evens(values):
    for item in values:
        yield item
    return "done"
