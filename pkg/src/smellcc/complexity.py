"""Cognitive complexity of a single function.

Increments:

* ``if``, conditional expression, ``for``, ``while`` and each ``except``
  clause cost 1 plus the current nesting level;
* each ``elif`` and each ``else`` clause costs a flat 1;
* each run of boolean operators costs 1, plus 1 per switch between
  ``and`` and ``or`` inside the run;
* each direct recursive call costs 1.

Nesting grows inside the bodies of the structures above and inside nested
functions and lambdas, which add nothing themselves.
"""

from __future__ import annotations

import ast

from smellcc.pysource import FUNCTION_TYPES, FunctionNode

_SELF_NAMES = ("self", "cls")


def cognitive_complexity(fn: FunctionNode) -> int:
    counter = _Counter(fn)
    counter.block(fn.body, 0)
    return counter.score


def boolean_sequence_cost(node: ast.BoolOp) -> int:
    ops = _flatten_ops(node)
    return 1 + sum(1 for prev, cur in zip(ops, ops[1:]) if type(prev) is not type(cur))


def _flatten_ops(node: ast.BoolOp) -> list[ast.boolop]:
    ops: list[ast.boolop] = []
    for i, value in enumerate(node.values):
        if isinstance(value, ast.BoolOp):
            ops.extend(_flatten_ops(value))
        if i < len(node.values) - 1:
            ops.append(node.op)
    return ops


def _boolean_leaves(node: ast.BoolOp):
    for value in node.values:
        if isinstance(value, ast.BoolOp):
            yield from _boolean_leaves(value)
        else:
            yield value


def _is_elif(parent: ast.If, child: ast.stmt) -> bool:
    # an elif sits in the same column as its `if`; `else: if` is indented or inline
    return (
        isinstance(child, ast.If)
        and child.col_offset == parent.col_offset
        and child.lineno != parent.lineno
    )


class _Counter:
    def __init__(self, fn: FunctionNode):
        self.name = fn.name
        args = fn.args.posonlyargs + fn.args.args
        self.receiver = args[0].arg if args and args[0].arg in _SELF_NAMES else None
        self.score = 0

    def block(self, stmts: list[ast.stmt], nesting: int) -> None:
        for stmt in stmts:
            self.visit(stmt, nesting)

    def visit(self, node: ast.AST, nesting: int) -> None:
        method = getattr(self, "visit_" + type(node).__name__, None)
        if method is not None:
            method(node, nesting)
        else:
            self.generic(node, nesting)

    def generic(self, node: ast.AST, nesting: int) -> None:
        for child in ast.iter_child_nodes(node):
            self.visit(child, nesting)

    # -- statements --------------------------------------------------------

    def visit_If(self, node: ast.If, nesting: int) -> None:
        self.score += 1 + nesting
        self.visit(node.test, nesting)
        self.block(node.body, nesting + 1)
        cur = node
        while cur.orelse:
            branch = cur.orelse
            if len(branch) == 1 and _is_elif(node, branch[0]):
                self.score += 1
                cur = branch[0]
                self.visit(cur.test, nesting)
                self.block(cur.body, nesting + 1)
            else:
                self.score += 1
                self.block(branch, nesting + 1)
                break

    def _loop(self, node: ast.For | ast.AsyncFor | ast.While, nesting: int) -> None:
        self.score += 1 + nesting
        for name in ("target", "iter", "test"):
            child = getattr(node, name, None)
            if child is not None:
                self.visit(child, nesting)
        self.block(node.body, nesting + 1)
        if node.orelse:
            self.score += 1
            self.block(node.orelse, nesting + 1)

    visit_For = visit_AsyncFor = visit_While = _loop

    def visit_Try(self, node: ast.Try, nesting: int) -> None:
        self.block(node.body, nesting)
        for handler in node.handlers:
            self.score += 1 + nesting
            if handler.type is not None:
                self.visit(handler.type, nesting)
            self.block(handler.body, nesting + 1)
        if node.orelse:
            self.score += 1
            self.block(node.orelse, nesting)
        self.block(node.finalbody, nesting)

    def _function(self, node: FunctionNode, nesting: int) -> None:
        for deco in node.decorator_list:
            self.visit(deco, nesting)
        self.visit(node.args, nesting)
        self.block(node.body, nesting + 1)

    visit_FunctionDef = visit_AsyncFunctionDef = _function

    # -- expressions -------------------------------------------------------

    def visit_BoolOp(self, node: ast.BoolOp, nesting: int) -> None:
        self.score += boolean_sequence_cost(node)
        for leaf in _boolean_leaves(node):
            self.visit(leaf, nesting)

    def visit_IfExp(self, node: ast.IfExp, nesting: int) -> None:
        self.score += 1 + nesting
        self.generic(node, nesting + 1)

    def visit_Lambda(self, node: ast.Lambda, nesting: int) -> None:
        self.visit(node.args, nesting)
        self.visit(node.body, nesting + 1)

    def visit_Call(self, node: ast.Call, nesting: int) -> None:
        func = node.func
        if isinstance(func, ast.Name) and func.id == self.name:
            self.score += 1
        elif (
            self.receiver
            and isinstance(func, ast.Attribute)
            and func.attr == self.name
            and isinstance(func.value, ast.Name)
            and func.value.id == self.receiver
        ):
            self.score += 1
        self.generic(node, nesting)


def is_nested_function(parents: dict[int, ast.AST], fn: FunctionNode) -> bool:
    cur = parents.get(id(fn))
    while cur is not None:
        if isinstance(cur, (*FUNCTION_TYPES, ast.Lambda)):
            return True
        cur = parents.get(id(cur))
    return False
