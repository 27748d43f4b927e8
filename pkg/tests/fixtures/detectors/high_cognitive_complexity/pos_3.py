import functools


@functools.lru_cache(maxsize=None)
def walk(node, depth):
    if node is None:  # +1
        return 0
    count = 0
    for child in node.children:  # +1
        if child.visible:  # +2
            count += walk(child, depth + 1)  # +1
        else:  # +1
            try:
                count += walk(child, depth)  # +1
            except ValueError:  # +3
                count -= 1
    while depth > 0 and count or node.parent:  # +1, +2 for the mixed run
        depth -= 1
        if count > 1000 or depth < 0:  # +2, +1
            return -1
    return count  # recursion counted once per call site: 16 in total
