def total(values):
    # result = sum(values)
    return sum(values)
