# Hand-scored functions; expected values live in scores.json.


def straight_line():
    return 1


def worked_example(a):
    if a:  # +1
        for i in r:  # +2
            if b:  # +3
                pass
    elif c and d:  # +1, +1
        pass
    else:  # +1
        pass


def single_chain(a, b, c):
    return a and b and c  # +1


def alternating_chain(a, b, c, d):
    return a and b or c and d  # +1, +2 for two switches


def negated_chain(a, b, c):
    return not (a or b) or c  # +1 outer run, +1 for the negated run


def one_if(value):
    if value:  # +1
        return 1
    return 0


def if_else(value):
    if value:  # +1
        return 1
    else:  # +1
        return 0


def elif_ladder(code):
    if code == 1:  # +1
        return "one"
    elif code == 2:  # +1
        return "two"
    elif code == 3:  # +1
        return "three"
    else:  # +1
        return "many"


def nested_loops(grid):
    total = 0
    for row in grid:  # +1
        for cell in row:  # +2
            while cell > 0:  # +3
                cell -= 1
                total += 1
    return total


def loop_else(items, target):
    for item in items:  # +1
        if item == target:  # +2
            break
    else:  # +1
        return None
    return target


def handlers(path):
    try:
        data = open(path).read()
    except FileNotFoundError:  # +1
        data = ""
    except (OSError, ValueError):  # +1
        data = None
    return data


def nested_handler(paths):
    found = []
    for path in paths:  # +1
        try:
            found.append(open(path).read())
        except OSError:  # +2
            if path.endswith(".tmp"):  # +3
                continue
    return found


def conditional_expression(value):
    return "big" if value > 10 else "small"  # +1


def nested_conditional_expression(value):
    if value:  # +1
        return "big" if value > 10 else "small"  # +2
    return None


def factorial(n):
    if n <= 1:  # +1
        return 1
    return n * factorial(n - 1)  # +1


def inner_function(items):
    def keep(item):
        if item:  # +2, nested one level inside keep
            return True
        return False

    return [item for item in items if keep(item)]


def lambda_nesting(items):
    return sorted(items, key=lambda item: item.size if item else 0)  # +2


def try_else(path):
    try:
        handle = open(path)
    except OSError:  # +1
        return None
    else:  # +1
        return handle


def else_if_not_elif(flag, other):
    if flag:  # +1
        return 1
    else:  # +1
        if other:  # +2
            return 2
    return 3


def mixed_condition_in_loop(rows, limit):
    count = 0
    while rows and limit:  # +1, +1
        row = rows.pop()
        if row > limit or row < 0 and limit:  # +2, +2
            count += 1
    return count


def dispatcher(kind, payload, strict):
    if kind == "a":  # +1
        for part in payload:  # +2
            if part and strict:  # +3, +1
                return part
    elif kind == "b":  # +1
        while payload:  # +2
            payload = payload[1:]
            if strict:  # +3
                break
    elif kind == "c":  # +1
        try:
            return int(payload)
        except ValueError:  # +2
            return None
    else:  # +1
        return payload if strict else None  # +2
    return None


def deep_tangle(matrix, limit):
    total = 0
    for row in matrix:  # +1
        for cell in row:  # +2
            if cell > limit:  # +3
                while cell:  # +4
                    if cell % 2 or cell % 3:  # +5, +1
                        cell -= 1
                    else:  # +1
                        cell //= 2
    return total


class Walker:
    def visit(self, node):
        if node is None:  # +1
            return 0
        return 1 + self.visit(node.left) + self.visit(node.right)  # +1, +1

    def count(self, nodes):
        return sum(1 for node in nodes if node)
