def until(values, stop):
    for item in values:
        if item == stop:
            return
        yield item
