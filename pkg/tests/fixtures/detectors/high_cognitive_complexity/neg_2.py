def describe(name, count):
    label = name.title()
    return f"{label}: {count}"
