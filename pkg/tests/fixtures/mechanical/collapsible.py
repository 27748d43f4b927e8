def gate(a, b, c, d):
    if a or b:
        # both must hold
        if c or d:
            return True
    if a:
        if b:
            if c:
                return 1
    return False
