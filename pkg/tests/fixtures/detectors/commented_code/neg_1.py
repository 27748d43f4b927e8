def area(width, height):
    # Compute the rectangle area from both sides.
    return width * height
