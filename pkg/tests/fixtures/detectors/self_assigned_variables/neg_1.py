def bump(value, other):
    value = other
    value = value + 1
    return value
