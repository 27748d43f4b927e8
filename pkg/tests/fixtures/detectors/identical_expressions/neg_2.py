import random


def roll(low, high):
    return random.random() == random.random() or low < high
