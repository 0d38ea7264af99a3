"""Parse validation for single tokenized Java statements.

A statement is valid when it parses as a local statement of a method
body: local-variable declarations, restricted expression statements
(assignment, call, new, ++/--), return/throw/break/continue/assert,
and control-flow headers whose body may be elided or left open with a
trailing '{'.  Lines that could only occur outside a method body
(member declarations, closing braces, case labels) are rejected, as
are constructs we deliberately do not model (block-bodied lambdas,
anonymous classes).  Rejection is the conservative direction: invalid
statements are dropped from the corpus.
"""

from __future__ import annotations

import logging

from .tokenizer import TokenizedStatement, is_identifier, is_number

log = logging.getLogger(__name__)

PRIMITIVE_TYPES = frozenset(
    {"boolean", "byte", "char", "short", "int", "long", "float", "double"}
)

# A line starting with one of these can only be a member/class declaration,
# never a statement inside a method body.
_MEMBER_ONLY_STARTS = frozenset(
    {"public", "private", "protected", "static", "abstract", "native",
     "class", "interface", "enum", "package", "import", "implements",
     "extends", "case", "default", "}"}
)

_ASSIGN_OPS = frozenset(
    {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^="}
)

_STATEMENT_EXPR_KINDS = frozenset({"assign", "call", "incdec", "new"})


class _Fail(Exception):
    pass


class _Parser:
    def __init__(self, tokens: tuple[str, ...]):
        self.toks = tokens
        self.i = 0

    # -- primitives ----------------------------------------------------

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> str:
        if self.i >= len(self.toks):
            raise _Fail("unexpected end")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, tok: str) -> bool:
        if self.peek() == tok:
            self.i += 1
            return True
        return False

    def expect(self, tok: str) -> None:
        if not self.accept(tok):
            raise _Fail(f"expected {tok!r} at {self.i}, got {self.peek()!r}")

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def ident(self) -> str:
        tok = self.next()
        if not is_identifier(tok):
            raise _Fail(f"expected identifier, got {tok!r}")
        return tok

    # -- statements ----------------------------------------------------

    def statement(self) -> None:
        tok = self.peek()
        if tok is None:
            raise _Fail("empty statement")
        if tok == ";":
            self.next()
            return
        if tok == "{":
            self.block()
            return
        if tok == "return":
            self.next()
            if not self.accept(";"):
                self.expression()
                self.expect(";")
            return
        if tok == "throw":
            self.next()
            self.expression()
            self.expect(";")
            return
        if tok in ("break", "continue"):
            self.next()
            if self.peek() != ";" and self.peek() is not None and is_identifier(self.peek()):
                self.next()
            self.expect(";")
            return
        if tok == "assert":
            self.next()
            self.expression()
            if self.accept(":"):
                self.expression()
            self.expect(";")
            return
        if tok == "if":
            self.next()
            self.expect("(")
            self.expression()
            self.expect(")")
            self.tail()
            if self.accept("else"):
                self.tail()
            return
        if tok == "while":
            self.next()
            self.expect("(")
            self.expression()
            self.expect(")")
            self.tail()
            return
        if tok == "for":
            self.next()
            self.for_header_and_tail()
            return
        if tok == "switch":
            self.next()
            self.expect("(")
            self.expression()
            self.expect(")")
            self.open_block_only()
            return
        if tok == "do":
            self.next()
            self.tail()
            if self.accept("while"):
                self.expect("(")
                self.expression()
                self.expect(")")
                self.expect(";")
            return
        if tok == "try":
            self.next()
            if self.accept("("):
                self.resource()
                while self.accept(";"):
                    if self.peek() == ")":
                        break
                    self.resource()
                self.expect(")")
            self.tail()
            while self.accept("catch"):
                self.expect("(")
                self.catch_param()
                self.expect(")")
                self.tail()
            if self.accept("finally"):
                self.tail()
            return
        if tok == "synchronized":
            self.next()
            self.expect("(")
            self.expression()
            self.expect(")")
            self.tail()
            return
        if tok in ("this", "super") and self.peek(1) == "(":
            self.next()
            self.call_arguments()
            self.expect(";")
            return
        # declaration, then expression statement, with backtracking
        save = self.i
        try:
            self.declaration()
            return
        except _Fail:
            self.i = save
        kind = self.expression()
        if kind not in _STATEMENT_EXPR_KINDS:
            raise _Fail(f"expression of kind {kind!r} is not a statement")
        self.expect(";")

    def tail(self) -> None:
        """Body of a control statement: elided, an open '{' at end of
        line, a complete block, or a single embedded statement."""
        if self.at_end():
            return
        if self.peek() == "{":
            if self.i == len(self.toks) - 1:
                self.next()
                return
            self.block()
            return
        if self.peek() in ("else", "catch", "finally", "while") and self.peek(1) in ("(", "{", None):
            # let the caller consume its continuation keyword
            return
        self.statement()

    def open_block_only(self) -> None:
        """switch body: either elided or '{' (possibly with full body)."""
        if self.at_end():
            return
        if self.peek() == "{":
            if self.i == len(self.toks) - 1:
                self.next()
                return
            # a complete inline switch body is rare; accept a full block
            # of case groups by scanning to the matching brace
            self.balanced_braces()
            return
        raise _Fail("switch requires a block")

    def block(self) -> None:
        self.expect("{")
        while not self.accept("}"):
            if self.at_end():
                raise _Fail("unterminated block")
            self.statement()

    def balanced_braces(self) -> None:
        self.expect("{")
        depth = 1
        while depth:
            tok = self.next()
            if tok == "{":
                depth += 1
            elif tok == "}":
                depth -= 1

    def for_header_and_tail(self) -> None:
        self.expect("(")
        # try foreach: [final] type ident : expr
        save = self.i
        try:
            self.accept("final")
            self.type_ref()
            self.ident()
            self.expect(":")
            self.expression()
            self.expect(")")
            self.tail()
            return
        except _Fail:
            self.i = save
        # classic three-part header
        if not self.accept(";"):
            save = self.i
            try:
                self.declaration_body()
            except _Fail:
                self.i = save
                self.expression_list()
            self.expect(";")
        if not self.accept(";"):
            self.expression()
            self.expect(";")
        if not self.accept(")"):
            self.expression_list()
            self.expect(")")
        self.tail()

    def resource(self) -> None:
        self.accept("final")
        self.type_ref()
        self.ident()
        self.expect("=")
        self.expression()

    def catch_param(self) -> None:
        self.accept("final")
        self.type_ref()
        while self.accept("|"):
            self.type_ref()
        self.ident()

    def declaration(self) -> None:
        self.declaration_body()
        self.expect(";")

    def declaration_body(self) -> None:
        self.accept("final")
        self.type_ref()
        self.declarator()
        while self.accept(","):
            self.declarator()

    def declarator(self) -> None:
        self.ident()
        while self.peek() == "[" and self.peek(1) == "]":
            self.next()
            self.next()
        if self.accept("="):
            self.variable_initializer()

    def variable_initializer(self) -> None:
        if self.peek() == "{":
            self.array_initializer()
        else:
            self.expression()

    def array_initializer(self) -> None:
        self.expect("{")
        if self.accept("}"):
            return
        self.variable_initializer()
        while self.accept(","):
            if self.peek() == "}":
                break
            self.variable_initializer()
        self.expect("}")

    # -- types ---------------------------------------------------------

    def type_ref(self) -> None:
        tok = self.peek()
        if tok in PRIMITIVE_TYPES or tok == "void":
            self.next()
        else:
            self.ident()
            while self.peek() == "." and self.peek(1) is not None and is_identifier(self.peek(1)):
                self.next()
                self.next()
            if self.peek() == "<":
                self.type_arguments()
        while self.peek() == "[" and self.peek(1) == "]":
            self.next()
            self.next()

    def type_arguments(self) -> None:
        self.expect("<")
        if self.accept(">"):          # diamond
            return
        self.type_argument()
        while self.accept(","):
            self.type_argument()
        self.expect(">")

    def type_argument(self) -> None:
        if self.accept("?"):
            if self.peek() in ("extends", "super"):
                self.next()
                self.type_ref()
            return
        self.type_ref()

    # -- expressions ---------------------------------------------------

    def expression_list(self) -> None:
        self.expression()
        while self.accept(","):
            self.expression()

    def expression(self) -> str:
        """Parse an expression, returning its statement-expression kind:
        'assign', 'call', 'incdec', 'new', or 'other'."""
        save = self.i
        try:
            kind = self.lambda_expr()
            return kind
        except _Fail:
            self.i = save
        kind = self.ternary()
        if self.peek() in _ASSIGN_OPS:
            self.next()
            self.expression()
            return "assign"
        return kind

    def lambda_expr(self) -> str:
        if is_identifier(self.peek() or "") and self.peek(1) == "->":
            self.next()
            self.next()
        elif self.peek() == "(":
            save = self.i
            self.next()
            if not self.accept(")"):
                try:
                    self.ident()
                    while self.accept(","):
                        self.ident()
                    self.expect(")")
                except _Fail:
                    self.i = save
                    raise
            if not self.accept("->"):
                self.i = save
                raise _Fail("not a lambda")
        else:
            raise _Fail("not a lambda")
        if self.peek() == "{":
            raise _Fail("block-bodied lambda unsupported")
        self.expression()
        return "other"

    def ternary(self) -> str:
        kind = self.binary(0)
        if self.accept("?"):
            self.expression()
            self.expect(":")
            self.expression()
            return "other"
        return kind

    _BINARY_LEVELS = (
        ("||",),
        ("&&",),
        ("|",),
        ("^",),
        ("&",),
        ("==", "!="),
        ("<", ">", "<=", ">=", "instanceof"),
        ("+", "-"),
        ("*", "/", "%"),
    )

    def binary(self, level: int) -> str:
        if level >= len(self._BINARY_LEVELS):
            return self.unary()
        kind = self.binary(level + 1)
        ops = self._BINARY_LEVELS[level]
        while self.peek() in ops:
            op = self.next()
            if op == "instanceof":
                self.type_ref()
            else:
                self.binary(level + 1)
            kind = "other"
        return kind

    def unary(self) -> str:
        tok = self.peek()
        if tok in ("!", "~"):
            self.next()
            self.unary()
            return "other"
        if tok in ("+", "-"):
            self.next()
            self.unary()
            return "other"
        if tok in ("++", "--"):
            self.next()
            self.unary()
            return "incdec"
        if tok == "(":
            save = self.i
            try:
                self.cast()
                self.unary()
                return "other"
            except _Fail:
                self.i = save
        return self.postfix()

    def cast(self) -> None:
        self.expect("(")
        tok = self.peek()
        if tok in PRIMITIVE_TYPES:
            self.type_ref()
            self.expect(")")
            nxt = self.peek()
            if nxt is None or not self._starts_unary(nxt):
                raise _Fail("not a cast")
            return
        self.type_ref()
        self.expect(")")
        nxt = self.peek()
        # reference cast only when clearly followed by an operand, to keep
        # '( a ) + b' a grouping
        if nxt is None or not (
            is_identifier(nxt) or is_number(nxt) or nxt[0] in "\"'" or nxt in ("(", "!", "~", "new", "this", "super")
        ):
            raise _Fail("not a cast")

    @staticmethod
    def _starts_unary(tok: str) -> bool:
        return (
            is_identifier(tok) or is_number(tok) or tok[0] in "\"'"
            or tok in ("(", "!", "~", "+", "-", "++", "--", "new", "this", "super")
        )

    def postfix(self) -> str:
        kind = self.primary()
        while True:
            tok = self.peek()
            if tok == "." and self.peek(1) is not None and (
                is_identifier(self.peek(1)) or self.peek(1) in ("this", "class", "new")
            ):
                self.next()
                member = self.next()
                if member == "new":
                    self.ident()
                    self.call_arguments()
                    kind = "new"
                elif self.peek() == "(":
                    self.call_arguments()
                    kind = "call"
                else:
                    kind = "other"
            elif tok == "(" and kind in ("other", "call"):
                # calling a non-name expression is not Java, but a bare
                # identifier primary lands here as a plain call
                raise _Fail("cannot call this expression")
            elif tok == "[":
                self.next()
                self.expression()
                self.expect("]")
                kind = "other"
            elif tok in ("++", "--"):
                self.next()
                return "incdec"
            elif tok == "::":
                self.next()
                if not self.accept("new"):
                    self.ident()
                kind = "other"
            else:
                return kind

    def primary(self) -> str:
        tok = self.peek()
        if tok is None:
            raise _Fail("expected expression")
        if is_number(tok) or tok[0] in "\"'":
            self.next()
            return "other"
        if tok == "(":
            self.next()
            self.expression()
            self.expect(")")
            return "other"
        if tok == "new":
            self.next()
            return self.creator()
        if tok in ("this", "super"):
            self.next()
            return "other"
        if tok == "void" and self.peek(1) == "." and self.peek(2) == "class":
            self.next(); self.next(); self.next()
            return "other"
        if tok in PRIMITIVE_TYPES:
            # primitive class literal: int . class
            self.next()
            while self.peek() == "[" and self.peek(1) == "]":
                self.next(); self.next()
            self.expect(".")
            if self.next() != "class":
                raise _Fail("expected class literal")
            return "other"
        if is_identifier(tok):
            self.next()
            if tok != "class" and self.peek() == "(":
                self.call_arguments()
                return "call"
            return "other"
        raise _Fail(f"unexpected token {tok!r}")

    def creator(self) -> str:
        tok = self.peek()
        if tok in PRIMITIVE_TYPES:
            self.next()
        else:
            self.ident()
            while self.peek() == "." and self.peek(1) is not None and is_identifier(self.peek(1)):
                self.next()
                self.next()
            if self.peek() == "<":
                self.type_arguments()
        if self.peek() == "(":
            self.call_arguments()
            if self.peek() == "{":
                raise _Fail("anonymous class unsupported")
            return "new"
        if self.peek() == "[":
            saw_dim = False
            while self.accept("["):
                if not self.accept("]"):
                    self.expression()
                    self.expect("]")
                    saw_dim = True
            if self.peek() == "{":
                self.array_initializer()
            elif not saw_dim:
                raise _Fail("array creation needs a dimension or initializer")
            return "new"
        raise _Fail("malformed creator")

    def call_arguments(self) -> None:
        self.expect("(")
        if self.accept(")"):
            return
        self.expression()
        while self.accept(","):
            self.expression()
        self.expect(")")


def validate_statement(stmt: TokenizedStatement) -> bool:
    tokens = stmt.tokens
    if not tokens:
        return False
    if tokens[0] in _MEMBER_ONLY_STARTS:
        return False
    if all(t in ("{", "}") for t in tokens):
        return False
    parser = _Parser(tokens)
    try:
        parser.statement()
        if not parser.at_end():
            raise _Fail(f"trailing tokens from {parser.i}")
        return True
    except _Fail as exc:
        log.debug("reject %r: %s", stmt.serialized(), exc)
        return False
