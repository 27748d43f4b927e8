def tangle(rows, limit):
    total = 0
    for row in rows:  # +1
        for cell in row:  # +2
            if cell > limit:  # +3
                total += cell
            elif cell < 0:  # +1
                total -= cell
            else:  # +1
                while total > limit:  # +4
                    total -= 1
    if total and limit or rows:  # +1, +2
        return total
    return 0
