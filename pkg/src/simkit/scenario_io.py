"""Text grammar for scenario files.

A deliberately small YAML-like surface: nested `key: value` maps with 2-space
indentation, `- item` lists, `[x, y, z]` numeric vectors, `#` comments, and
bare or quoted strings.  Parsing yields plain dict/list/scalar trees; errors
carry the 1-based source line.  serialize_tree is the exact inverse for trees
made of the supported value kinds.
"""

from __future__ import annotations


class ScenarioSyntaxError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _strip_comment(text: str) -> str:
    out = []
    in_quote: str | None = None
    for i, ch in enumerate(text):
        if in_quote:
            if ch == in_quote:
                in_quote = None
            out.append(ch)
        elif ch in "\"'":
            in_quote = ch
            out.append(ch)
        elif ch == "#" and (i == 0 or text[i - 1] in " \t"):
            break
        else:
            out.append(ch)
    return "".join(out).rstrip()


def parse_scalar(token: str, line: int | None = None):
    token = token.strip()
    if token.startswith("[") and token.endswith("]"):
        inner = token[1:-1].strip()
        if not inner:
            return []
        items = [t.strip() for t in inner.split(",")]
        vals = []
        for t in items:
            v = parse_scalar(t, line)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ScenarioSyntaxError(f"vector element {t!r} is not a number", line)
            vals.append(v)
        return vals
    if len(token) >= 2 and token[0] in "\"'" and token[-1] == token[0]:
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    if token == "":
        raise ScenarioSyntaxError("empty value", line)
    return token


class _Line:
    __slots__ = ("indent", "text", "num")

    def __init__(self, indent: int, text: str, num: int):
        self.indent = indent
        self.text = text
        self.num = num


def _logical_lines(source: str) -> list[_Line]:
    lines = []
    for num, raw in enumerate(source.splitlines(), start=1):
        if "\t" in raw[: len(raw) - len(raw.lstrip())]:
            raise ScenarioSyntaxError("tabs are not allowed in indentation", num)
        stripped = _strip_comment(raw)
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip(" "))
        lines.append(_Line(indent, stripped.strip(), num))
    return lines


def _split_key(text: str, num: int) -> tuple[str, str]:
    # Split on the first ':' that is not inside a bracket or quote.
    depth = 0
    in_quote: str | None = None
    for i, ch in enumerate(text):
        if in_quote:
            if ch == in_quote:
                in_quote = None
        elif ch in "\"'":
            in_quote = ch
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == ":" and depth == 0:
            return text[:i].strip(), text[i + 1 :].strip()
    raise ScenarioSyntaxError(f"expected 'key: value', got {text!r}", num)


def _parse_block(lines: list[_Line], i: int, indent: int):
    """Parse the block starting at lines[i] whose items share this indent."""
    if lines[i].text.startswith("- ") or lines[i].text == "-":
        return _parse_list(lines, i, indent)
    return _parse_map(lines, i, indent)


def _parse_map(lines: list[_Line], i: int, indent: int):
    out: dict = {}
    while i < len(lines) and lines[i].indent == indent:
        ln = lines[i]
        if ln.text.startswith("- "):
            raise ScenarioSyntaxError("list item in mapping context", ln.num)
        key, rest = _split_key(ln.text, ln.num)
        if not key:
            raise ScenarioSyntaxError("empty key", ln.num)
        if key in out:
            raise ScenarioSyntaxError(f"duplicate key {key!r}", ln.num)
        if rest:
            out[key] = parse_scalar(rest, ln.num)
            i += 1
        else:
            i += 1
            if i < len(lines) and lines[i].indent > indent:
                out[key], i = _parse_block(lines, i, lines[i].indent)
            else:
                out[key] = {}
    if i < len(lines) and lines[i].indent > indent:
        raise ScenarioSyntaxError("unexpected indent", lines[i].num)
    return out, i


def _parse_list(lines: list[_Line], i: int, indent: int):
    out: list = []
    while i < len(lines) and lines[i].indent == indent:
        ln = lines[i]
        if not (ln.text.startswith("- ") or ln.text == "-"):
            raise ScenarioSyntaxError("expected '- ' list item", ln.num)
        rest = ln.text[2:].strip() if ln.text != "-" else ""
        if not rest:
            i += 1
            if i < len(lines) and lines[i].indent > indent:
                item, i = _parse_block(lines, i, lines[i].indent)
            else:
                item = {}
            out.append(item)
        elif ":" in rest and not rest.startswith(("[", '"', "'")):
            # Inline first pair of a mapping item; siblings continue 2 deeper.
            key, val = _split_key(rest, ln.num)
            item = {key: parse_scalar(val, ln.num)} if val else {}
            inner_indent = indent + 2
            i += 1
            if not val and i < len(lines) and lines[i].indent > inner_indent:
                item[key], i = _parse_block(lines, i, lines[i].indent)
            if i < len(lines) and lines[i].indent == inner_indent and not lines[i].text.startswith("- "):
                more, i = _parse_map(lines, i, inner_indent)
                for k, v in more.items():
                    if k in item:
                        raise ScenarioSyntaxError(f"duplicate key {k!r} in list item", ln.num)
                    item[k] = v
            out.append(item)
        else:
            out.append(parse_scalar(rest, ln.num))
            i += 1
    if i < len(lines) and lines[i].indent > indent:
        raise ScenarioSyntaxError("unexpected indent", lines[i].num)
    return out, i


def parse_tree(source: str):
    """Parse scenario text into a plain dict/list/scalar tree."""
    lines = _logical_lines(source)
    if not lines:
        return {}
    if lines[0].indent != 0:
        raise ScenarioSyntaxError("top level must not be indented", lines[0].num)
    tree, i = _parse_block(lines, 0, 0)
    if i != len(lines):
        raise ScenarioSyntaxError("trailing content", lines[i].num)
    return tree


def format_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(format_scalar(v) for v in value) + "]"
    s = str(value)
    if s == "" or s != s.strip() or any(c in s for c in ":#[]\"'") or s in ("true", "false"):
        return '"' + s + '"'
    try:
        float(s)
    except ValueError:
        return s
    return '"' + s + '"'


def _is_scalar(value) -> bool:
    return isinstance(value, (int, float, bool, str)) or (
        isinstance(value, list) and all(isinstance(v, (int, float)) for v in value)
    )


def serialize_tree(tree, indent: int = 0) -> str:
    out: list[str] = []
    pad = " " * indent
    if isinstance(tree, dict):
        for key, value in tree.items():
            if _is_scalar(value):
                out.append(f"{pad}{key}: {format_scalar(value)}\n")
            elif isinstance(value, (dict, list)) and not value:
                out.append(f"{pad}{key}:\n")
            else:
                out.append(f"{pad}{key}:\n")
                out.append(serialize_tree(value, indent + 2))
    elif isinstance(tree, list):
        for item in tree:
            if _is_scalar(item):
                out.append(f"{pad}- {format_scalar(item)}\n")
            elif isinstance(item, dict) and item:
                keys = list(item)
                first = keys[0]
                if _is_scalar(item[first]):
                    out.append(f"{pad}- {first}: {format_scalar(item[first])}\n")
                    rest = {k: item[k] for k in keys[1:]}
                else:
                    out.append(f"{pad}-\n")
                    rest = item
                if rest:
                    out.append(serialize_tree(rest, indent + 2))
            else:
                out.append(f"{pad}-\n")
                out.append(serialize_tree(item, indent + 2))
    else:
        raise ValueError(f"cannot serialize {type(tree).__name__} at top level")
    return "".join(out)
