def keep(value):
    value = value
    return value
