def report(count):
    if count:
        print(count)
    else:
        pass
    for item in range(count):
        print(item)
    else:
        pass
