def check(flag):
    if flag:
        pass
    return flag
