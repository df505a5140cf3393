"""Locale-independent CSV number formatting."""


def fmt(x) -> str:
    """12 significant digits, ``.`` decimal."""
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".12g")


def render(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"
