def Eq(left, right):
    return left == right
