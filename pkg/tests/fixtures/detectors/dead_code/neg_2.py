def load(path):
    try:
        return open(path).read()
    finally:
        print("closing")
