def first_positive(values):
    for value in values:
        if value > 0:
            return value
            print("unreachable")
    raise LookupError("none")
    return None


def drain(queue):
    while queue:
        queue.pop()
        continue
        queue.clear()
