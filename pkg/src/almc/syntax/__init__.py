"""Surface syntax: lexer, AST, recursive-descent parser, pretty-printer."""

from almc.syntax.ast import *  # noqa: F401,F403
from almc.syntax.lexer import Token, tokenize  # noqa: F401
from almc.syntax.parser import parse_file, parse_literal_text  # noqa: F401
from almc.syntax.printer import pretty  # noqa: F401
