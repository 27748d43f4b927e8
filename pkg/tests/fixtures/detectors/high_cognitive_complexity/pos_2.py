def route(kind, size, urgent, retry):
    if kind == "a":  # +1
        if size > 10:  # +2
            return 1
        else:  # +1
            return 2
    elif kind == "b":  # +1
        for attempt in range(retry):  # +2
            if urgent or size > 5 and retry:  # +3, +2
                return attempt
    elif kind == "c":  # +1
        while size:  # +2
            size -= 1
    else:  # +1
        return 0
    return 3 if urgent else 4  # +1
