def placeholder():
    pass


class Marker:
    pass
