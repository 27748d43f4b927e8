"""Lexical scope analysis and scope-aware renaming."""

from __future__ import annotations

import ast
import keyword
import re
from dataclasses import dataclass, field

from smellcc.pysource import FUNCTION_TYPES, Edit, FunctionNode, SourceUnit, Span, walk_shallow

_COMPREHENSIONS = (ast.ListComp, ast.SetComp, ast.DictComp, ast.GeneratorExp)
_DYNAMIC_CALLS = frozenset({"locals", "vars", "eval", "exec"})


class RenameError(ValueError):
    pass


class NameCollision(RenameError):
    pass


class ScopeEscape(RenameError):
    pass


@dataclass(eq=False)
class Scope:
    node: ast.AST
    kind: str  # module | function | class | comprehension
    parent: "Scope | None"
    bindings: set[str] = field(default_factory=set)
    params: list[str] = field(default_factory=list)
    globals: set[str] = field(default_factory=set)
    nonlocals: set[str] = field(default_factory=set)
    children: list["Scope"] = field(default_factory=list)
    uses_dynamic_locals: bool = False

    def is_within(self, other: "Scope") -> bool:
        cur: Scope | None = self
        while cur is not None:
            if cur is other:
                return True
            cur = cur.parent
        return False

    def __repr__(self) -> str:
        name = getattr(self.node, "name", type(self.node).__name__)
        return f"<Scope {self.kind} {name}>"


@dataclass(eq=False)
class Occurrence:
    name: str
    scope: Scope
    span: Span | None
    binding: bool
    resolved: Scope | None = None


@dataclass(eq=False)
class KeywordSite:
    """A ``name=`` keyword argument at a call site."""

    call: ast.Call
    keyword: ast.keyword
    scope: Scope
    span: Span | None


class ScopeTree:
    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self.module = Scope(unit.tree, "module", None)
        self.occurrences: list[Occurrence] = []
        self.keyword_sites: list[KeywordSite] = []
        self.attribute_refs: list[tuple[ast.Attribute, Scope]] = []
        self.by_node: dict[int, Scope] = {id(unit.tree): self.module}
        self._declare(unit.tree, self.module)
        self._block(unit.tree.body, self.module)
        for occ in self.occurrences:
            occ.resolved = self.resolve(occ.scope, occ.name)

    # -- construction ------------------------------------------------------

    def _new_scope(self, node: ast.AST, kind: str, parent: Scope) -> Scope:
        scope = Scope(node, kind, parent)
        parent.children.append(scope)
        self.by_node[id(node)] = scope
        if kind != "comprehension":
            self._declare(node, scope)
        return scope

    def _declare(self, node: ast.AST, scope: Scope) -> None:
        for sub in walk_shallow(node):
            if isinstance(sub, ast.Global):
                scope.globals.update(sub.names)
            elif isinstance(sub, ast.Nonlocal):
                scope.nonlocals.update(sub.names)
            elif (
                isinstance(sub, ast.Call)
                and isinstance(sub.func, ast.Name)
                and sub.func.id in _DYNAMIC_CALLS
            ):
                scope.uses_dynamic_locals = True

    def _bind(self, scope: Scope, name: str, span: Span | None) -> None:
        if name not in scope.globals and name not in scope.nonlocals:
            scope.bindings.add(name)
        self.occurrences.append(Occurrence(name, scope, span, True))

    def _ref(self, scope: Scope, name: str, span: Span | None) -> None:
        self.occurrences.append(Occurrence(name, scope, span, False))

    def _ident(self, node: ast.AST, name: str) -> Span | None:
        span = self.unit.span(node)
        return None if span is None else Span(span.start, span.start + len(name))

    def _block(self, stmts: list[ast.stmt], scope: Scope) -> None:
        for stmt in stmts:
            self._visit(stmt, scope)

    def _visit(self, node: ast.AST, scope: Scope) -> None:
        unit = self.unit
        if isinstance(node, FUNCTION_TYPES) or isinstance(node, ast.Lambda):
            args = node.args
            for default in args.defaults + [d for d in args.kw_defaults if d is not None]:
                self._visit(default, scope)
            if not isinstance(node, ast.Lambda):
                for deco in node.decorator_list:
                    self._visit(deco, scope)
                for a in _all_args(args):
                    if a.annotation is not None:
                        self._visit(a.annotation, scope)
                if node.returns is not None:
                    self._visit(node.returns, scope)
                self._bind(scope, node.name, unit.name_span(node))
            inner = self._new_scope(node, "function", scope)
            for a in _all_args(args):
                inner.params.append(a.arg)
                self._bind(inner, a.arg, self._ident(a, a.arg))
            if isinstance(node, ast.Lambda):
                self._visit(node.body, inner)
            else:
                self._block(node.body, inner)
        elif isinstance(node, ast.ClassDef):
            for sub in node.decorator_list + node.bases + [k.value for k in node.keywords]:
                self._visit(sub, scope)
            self._bind(scope, node.name, unit.name_span(node))
            inner = self._new_scope(node, "class", scope)
            self._block(node.body, inner)
        elif isinstance(node, _COMPREHENSIONS):
            gens = node.generators
            self._visit(gens[0].iter, scope)
            inner = self._new_scope(node, "comprehension", scope)
            for i, gen in enumerate(gens):
                if i:
                    self._visit(gen.iter, inner)
                self._visit(gen.target, inner)
                for cond in gen.ifs:
                    self._visit(cond, inner)
            if isinstance(node, ast.DictComp):
                self._visit(node.key, inner)
                self._visit(node.value, inner)
            else:
                self._visit(node.elt, inner)
        elif isinstance(node, ast.Name):
            if isinstance(node.ctx, ast.Load):
                self._ref(scope, node.id, unit.span(node))
            else:
                self._bind(scope, node.id, unit.span(node))
        elif isinstance(node, ast.NamedExpr):
            target_scope = scope
            while target_scope.kind == "comprehension":
                target_scope = target_scope.parent
            self._bind(target_scope, node.target.id, unit.span(node.target))
            self._visit(node.value, scope)
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                if alias.name == "*":
                    continue
                bound = alias.asname or alias.name.split(".")[0]
                span = unit.span(alias)
                tok = unit.find_name_token(bound, span.start, span.end) if span else None
                if alias.asname is not None and tok is not None:
                    # `import a as a`: the bound token is the last one
                    later = unit.find_name_token(bound, tok.end, span.end)
                    tok = later or tok
                self._bind(scope, bound, tok)
        elif isinstance(node, ast.ExceptHandler):
            if node.type is not None:
                self._visit(node.type, scope)
            if node.name:
                lo = unit.span(node.type).end if node.type is not None else unit.span(node).start
                self._bind(scope, node.name, unit.find_name_token(node.name, lo))
            self._block(node.body, scope)
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            span = unit.span(node)
            lo = span.start
            for name in node.names:
                tok = unit.find_name_token(name, lo, span.end)
                if tok is not None:
                    lo = tok.end
                self._ref(scope, name, tok)
        elif hasattr(ast, "MatchAs") and isinstance(node, (ast.MatchAs, ast.MatchStar)):
            if node.name:
                span = unit.span(node)
                self._bind(scope, node.name, unit.find_name_token(node.name, span.start, span.end) if span else None)
            self.generic(node, scope)
        elif hasattr(ast, "MatchMapping") and isinstance(node, ast.MatchMapping):
            if node.rest:
                span = unit.span(node)
                self._bind(scope, node.rest, unit.find_name_token(node.rest, span.start, span.end) if span else None)
            self.generic(node, scope)
        elif isinstance(node, ast.Call):
            for kw in node.keywords:
                if kw.arg is not None:
                    self.keyword_sites.append(KeywordSite(node, kw, scope, self._ident(kw, kw.arg)))
            self.generic(node, scope)
        elif isinstance(node, ast.Attribute):
            self.attribute_refs.append((node, scope))
            self.generic(node, scope)
        else:
            self.generic(node, scope)

    def generic(self, node: ast.AST, scope: Scope) -> None:
        for child in ast.iter_child_nodes(node):
            self._visit(child, scope)

    # -- queries -------------------------------------------------------------

    def scope_for(self, node: ast.AST) -> Scope:
        return self.by_node[id(node)]

    def resolve(self, scope: Scope, name: str) -> Scope | None:
        """Scope whose binding ``name`` refers to from ``scope``; ``None`` means builtin/undefined."""
        if name in scope.globals:
            return self.module if name in self.module.bindings else None
        if name in scope.nonlocals:
            cur = scope.parent
            while cur is not None and cur.kind != "module":
                if cur.kind == "function" and name in cur.bindings:
                    return cur
                cur = cur.parent
            return None
        if name in scope.bindings:
            return scope
        cur = scope.parent
        while cur is not None:
            if cur.kind != "class" and name in cur.bindings:
                return cur
            cur = cur.parent
        return None

    def references_to(self, target: Scope, name: str) -> list[Occurrence]:
        return [o for o in self.occurrences if o.name == name and o.resolved is target]

    def edges(self) -> list[tuple[str, Scope, Scope | None, bool]]:
        return [(o.name, o.scope, o.resolved, o.binding) for o in self.occurrences]


def _all_args(args: ast.arguments) -> list[ast.arg]:
    out = list(args.posonlyargs) + list(args.args)
    if args.vararg:
        out.append(args.vararg)
    out.extend(args.kwonlyargs)
    if args.kwarg:
        out.append(args.kwarg)
    return out


def is_identifier(name: str) -> bool:
    return name.isidentifier() and not keyword.iskeyword(name)


def _module_exports(tree: ast.Module) -> set[str]:
    names: set[str] = set()
    for node in tree.body:
        if isinstance(node, (ast.Assign, ast.AugAssign, ast.AnnAssign)):
            targets = node.targets if isinstance(node, ast.Assign) else [node.target]
            if any(isinstance(t, ast.Name) and t.id == "__all__" for t in targets):
                for sub in ast.walk(node.value) if node.value is not None else ():
                    if isinstance(sub, ast.Constant) and isinstance(sub.value, str):
                        names.add(sub.value)
    return names


def _target_scope(tree: ScopeTree, fn: FunctionNode | None, old: str) -> Scope:
    if fn is None:
        return tree.module
    inner = tree.scope_for(fn)
    if old in inner.bindings:
        return inner
    if fn.name == old:
        for scope in _walk_scopes(tree.module):
            if any(c.node is fn for c in scope.children):
                return scope
    raise RenameError(f"{old!r} is not bound in {fn.name!r}")


def _walk_scopes(scope: Scope):
    yield scope
    for child in scope.children:
        yield from _walk_scopes(child)


def rename_symbol(
    unit: SourceUnit,
    fn: FunctionNode | None,
    old_name: str,
    new_name: str,
    *,
    rename_exports: bool = False,
    pattern: str | None = None,
) -> SourceUnit:
    """Rename the binding of ``old_name`` visible from ``fn`` and all references to it.

    ``fn`` selects the scope: a parameter or local of ``fn``, or ``fn``'s own
    name (bound in the enclosing scope). ``None`` means a module-level name.
    Inner scopes that rebind ``old_name`` are left alone.
    """
    if old_name == new_name:
        return unit
    return unit.apply(rename_edits(unit, fn, old_name, new_name, rename_exports=rename_exports, pattern=pattern))


def rename_edits(
    unit: SourceUnit,
    fn: FunctionNode | None,
    old_name: str,
    new_name: str,
    *,
    rename_exports: bool = False,
    pattern: str | None = None,
) -> list[Edit]:
    """The edits :func:`rename_symbol` would apply."""
    if not is_identifier(new_name):
        raise RenameError(f"{new_name!r} is not a valid identifier")
    if pattern is not None and not re.search(pattern, new_name):
        raise RenameError(f"{new_name!r} does not match {pattern}")
    if old_name == new_name:
        return []

    tree = ScopeTree(unit)
    target = _target_scope(tree, fn, old_name)
    occurrences = tree.references_to(target, old_name)
    if not occurrences:
        raise RenameError(f"no binding of {old_name!r} found")

    # -- escape analysis --
    if any(s.uses_dynamic_locals for s in _walk_scopes(target)):
        raise ScopeEscape(f"scope of {old_name!r} uses dynamic local access")
    if target.kind == "module":
        if old_name in _module_exports(unit.tree):
            raise ScopeEscape(f"{old_name!r} is listed in __all__")
        if not old_name.startswith("_") and not rename_exports:
            raise ScopeEscape(f"{old_name!r} is a module-level public name; pass rename_exports to rename it")
    if target.kind == "class" and not rename_exports:
        raise ScopeEscape(f"{old_name!r} is a class attribute reachable through instances")

    edits: list[Span] = [o.span for o in occurrences]
    is_param = target.kind == "function" and old_name in target.params
    if is_param:
        edits.extend(_keyword_sites_for_param(tree, target, old_name, rename_exports))
    if target.kind == "class":
        edits.extend(_attribute_refs(tree, target, old_name))

    # -- collision analysis --
    if new_name in target.bindings:
        raise NameCollision(f"{new_name!r} is already bound in this scope")
    for occ in tree.occurrences:
        if occ.name != new_name or not occ.scope.is_within(target):
            continue
        if occ.resolved is None or not occ.resolved.is_within(target):
            raise NameCollision(f"{new_name!r} is referenced here and would be captured")
    for occ in occurrences:
        shadow = tree.resolve(occ.scope, new_name)
        if shadow is not None and shadow is not target and shadow.is_within(target):
            raise NameCollision(f"{new_name!r} is bound in an inner scope that refers to {old_name!r}")
    if target.kind == "class":
        for attr, _ in tree.attribute_refs:
            if attr.attr == new_name:
                raise NameCollision(f"attribute {new_name!r} already used")

    patches = []
    for span in set(edits):
        if span is None or unit.text[span.start : span.end] != old_name:
            raise ScopeEscape(f"cannot locate every occurrence of {old_name!r} in the source")
        patches.append(Edit(span.start, span.end, new_name))
    return sorted(patches, key=lambda e: e.start)


def _keyword_sites_for_param(tree: ScopeTree, target: Scope, name: str, rename_exports: bool) -> list[Span]:
    fn = target.node
    if isinstance(fn, ast.Lambda):
        raise ScopeEscape("lambda parameters cannot be renamed safely")
    if name in [a.arg for a in fn.args.posonlyargs] or name in (
        fn.args.vararg.arg if fn.args.vararg else None,
        fn.args.kwarg.arg if fn.args.kwarg else None,
    ):
        return []
    holder = target.parent
    exported = holder.kind == "class" or (holder.kind == "module" and not fn.name.startswith("_"))
    if exported and not rename_exports:
        raise ScopeEscape(f"parameter {name!r} of {fn.name!r} may be passed by keyword from other files")
    spans = []
    for site in tree.keyword_sites:
        if site.keyword.arg != name:
            continue
        func = site.call.func
        if isinstance(func, ast.Name) and func.id == fn.name and tree.resolve(site.scope, fn.name) is holder:
            spans.append(site.span)
        elif (
            holder.kind == "class"
            and isinstance(func, ast.Attribute)
            and func.attr == fn.name
            and isinstance(func.value, ast.Name)
            and func.value.id in ("self", "cls")
        ):
            spans.append(site.span)
    return spans


def _attribute_refs(tree: ScopeTree, target: Scope, name: str) -> list[Span]:
    spans = []
    for attr, scope in tree.attribute_refs:
        if attr.attr != name or not scope.is_within(target):
            continue
        if isinstance(attr.value, ast.Name) and attr.value.id in ("self", "cls"):
            end = tree.unit.span(attr).end
            spans.append(Span(end - len(name), end))
    return spans

