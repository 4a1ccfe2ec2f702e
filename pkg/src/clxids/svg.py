"""Deterministic standalone SVG 1.1 rendering of explanation artifacts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .errors import UnknownArtifactKind

STYLE_VERSION = 1
CELL = 24.0
MARGIN = 20.0

CLASS_COLORS = {
    "benign": "#1f5fbf",
    "malicious": "#d62728",
    "branch": "#f2c80f",
    "unlabeled": "#9e9e9e",
}
LOW = (13, 8, 135)  # dark: neighbors close together
HIGH = (252, 253, 191)  # light: far apart


def _num(v):
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def _ramp(t):
    t = min(max(t, 0.0), 1.0)
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(LOW, HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def _doc(width, height, body, title):
    head = (
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_num(width)}" height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">\n'
        f"<title>{escape(title)}</title>\n"
        f'<desc>clxids style v{STYLE_VERSION}</desc>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _hex_points(cx, cy, r):
    pts = []
    for k in range(6):
        a = math.pi / 180.0 * (60 * k - 30)
        pts.append(f"{_num(cx + r * math.cos(a))},{_num(cy + r * math.sin(a))}")
    return " ".join(pts)


def _cell_centers(cells, shape):
    """Map lattice coords to pixel centers. Hex shape shifts odd rows by half a cell."""
    rows = [c["coord"][0] for c in cells]
    cols = [c["coord"][1] for c in cells]
    r0, c0 = min(rows), min(cols)
    centers = []
    for r, c in zip(rows, cols):
        if shape == "hex":
            dx = CELL * (c - c0) + (CELL / 2 if (r % 2) else 0.0)
            dy = CELL * 0.866 * (r - r0)
        else:
            dx, dy = CELL * (c - c0), CELL * (r - r0)
        centers.append((MARGIN + CELL / 2 + dx, MARGIN + CELL / 2 + dy))
    width = max(x for x, _ in centers) + CELL / 2 + MARGIN + (CELL / 2 if shape == "hex" else 0)
    height = max(y for _, y in centers) + CELL / 2 + MARGIN
    return centers, width, height


def _cell_shape(cx, cy, fill, shape, extra=""):
    if shape == "hex":
        return f'<polygon points="{_hex_points(cx, cy, CELL / 1.732)}" fill="{fill}" stroke="#ffffff" stroke-width="0.5"{extra}/>'
    half = CELL / 2
    return (f'<rect x="{_num(cx - half)}" y="{_num(cy - half)}" width="{_num(CELL)}" height="{_num(CELL)}" '
            f'fill="{fill}" stroke="#ffffff" stroke-width="0.5"{extra}/>')


def _grid(art, shape, color_of):
    cells = art["payload"]["cells"]
    if not cells:
        raise UnknownArtifactKind("artifact has no cells")
    centers, width, height = _cell_centers(cells, shape)
    body = []
    for cell, (cx, cy) in zip(cells, centers):
        body.append(_cell_shape(cx, cy, color_of(cell), shape,
                                f' data-id="{cell["id"]}"'))
    return body, centers, width, height


def _normalizer(values):
    lo, hi = min(values), max(values)
    span = hi - lo
    return (lambda v: 0.0) if span == 0 else (lambda v: (v - lo) / span)


def _render_u_matrix(art, shape):
    cells = art["payload"]["cells"]
    norm = _normalizer([c["value"] for c in cells])
    body, centers, width, height = _grid(art, shape, lambda c: _ramp(norm(c["value"])))
    where = {c["id"]: xy for c, xy in zip(cells, centers)}
    for ray in art["payload"].get("starburst", []):
        if ray["to"] == ray["id"]:
            x, y = where[ray["id"]]
            body.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="2.5" fill="#000000"/>')
        else:
            (x1, y1), (x2, y2) = where[ray["id"]], where[ray["to"]]
            body.append(f'<line x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" y2="{_num(y2)}" '
                        'stroke="#000000" stroke-width="1.2"/>')
    return width, height, body


def _render_heatmap(art, shape):
    cells = art["payload"]["cells"]
    norm = _normalizer([c["value"] for c in cells])
    body, _, width, height = _grid(art, shape, lambda c: _ramp(norm(c["value"])))
    return width, height, body


def _render_label_map(art, shape):
    def color(cell):
        if cell.get("branch"):
            return CLASS_COLORS["branch"]
        if cell["label"] is None:
            return CLASS_COLORS["unlabeled"]
        return CLASS_COLORS["malicious" if cell["label"] == 1 else "benign"]

    body, centers, width, height = _grid(art, shape, color)
    for cell, (cx, cy) in zip(art["payload"]["cells"], centers):
        text = "B" if cell.get("branch") else ("-" if cell["label"] is None else str(cell["label"]))
        body.append(f'<text x="{_num(cx)}" y="{_num(cy + 4)}" font-size="10" text-anchor="middle" '
                    f'fill="#ffffff">{text}</text>')
    return width, height, body


def _render_bars(items, value_key):
    bar_w = 240.0
    label_w = 200.0
    row_h = 18.0
    body = []
    for k, item in enumerate(items):
        y = MARGIN + k * row_h
        v = max(0.0, min(1.0, item[value_key]))
        body.append(f'<text x="{_num(MARGIN + label_w - 6)}" y="{_num(y + 13)}" font-size="11" '
                    f'text-anchor="end">{escape(str(item["name"]))}</text>')
        body.append(f'<rect x="{_num(MARGIN + label_w)}" y="{_num(y + 2)}" width="{_num(bar_w * v)}" '
                    f'height="{_num(row_h - 4)}" fill="#1f5fbf"/>')
        body.append(f'<text x="{_num(MARGIN + label_w + bar_w * v + 4)}" y="{_num(y + 13)}" '
                    f'font-size="10">{_num(v)}</text>')
    width = 2 * MARGIN + label_w + bar_w + 40
    height = 2 * MARGIN + row_h * max(1, len(items))
    return width, height, body


def _render_global(art, shape):
    return _render_bars(art["payload"]["features"], "score")


def _render_local(art, shape):
    return _render_bars(art["payload"]["features"], "significance")


def _render_treemap(art, shape):
    payload = art["payload"]
    body = []
    for box in payload["boxes"]:
        x, y, w, h = (MARGIN + box["x"], MARGIN + box["y"], box["w"], box["h"])
        attrs = (f'x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" height="{_num(h)}"')
        if box["kind"] == "map":
            body.append(f'<rect {attrs} fill="none" stroke="#333333" stroke-width="1">'
                        f'<title>{escape(box["label"])}</title></rect>')
        else:
            fill = CLASS_COLORS.get(box["class"], CLASS_COLORS["unlabeled"])
            body.append(f'<rect {attrs} fill="{fill}" stroke="#ffffff" stroke-width="0.3">'
                        f'<title>{escape(box["label"])} hits={box["hit_count"]}</title></rect>')
    return payload["width"] + 2 * MARGIN, payload["height"] + 2 * MARGIN, body


RENDERERS = {
    "u_matrix": _render_u_matrix,
    "feature_heatmap": _render_heatmap,
    "label_map": _render_label_map,
    "global_explanation": _render_global,
    "local_explanation": _render_local,
    "treemap": _render_treemap,
}


def render_svg(art, style=None):
    """Render an artifact dict to an SVG string.

    ``style`` picks the lattice cell shape, ``"square"`` or ``"hex"``; by
    default growing maps draw hexagons and fixed-grid SOMs draw squares.
    """
    if not isinstance(art, dict) or art.get("kind") not in RENDERERS or "payload" not in art:
        kind = art.get("kind") if isinstance(art, dict) else type(art).__name__
        raise UnknownArtifactKind(f"cannot render artifact kind {kind!r}")
    payload = art["payload"]
    if style is None:
        style = "square" if payload.get("model") == "som" else "hex"
    if style not in ("square", "hex"):
        raise UnknownArtifactKind(f"unknown style {style!r}")
    try:
        width, height, body = RENDERERS[art["kind"]](art, style)
    except (KeyError, TypeError) as exc:
        raise UnknownArtifactKind(f"malformed {art['kind']} payload: {exc!r}") from None
    title = f"{art['kind']} {art.get('map_id', '')}".strip()
    return _doc(width, height, body, title)
