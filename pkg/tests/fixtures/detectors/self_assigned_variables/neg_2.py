def swap(left, right):
    left, right = right, left
    return left, right
