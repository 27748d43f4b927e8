def same(value):
    return value == value
