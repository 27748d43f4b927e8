def fail(message):
    raise ValueError(message)
    print(message)
    return message
