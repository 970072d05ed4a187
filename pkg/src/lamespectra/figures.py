"""
SVG scatter plots, polylines and disks in the complex plane

Coordinates are written with 12 significant digits so that identical
inputs give identical files.
"""

import numpy as np

SVG_NS = 'http://www.w3.org/2000/svg'
DIGITS = 12
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b')


def fmt(x):
    return f'{float(x):.{DIGITS}g}'


def props_repr(d):
    parts = []
    for key, value in d.items():
        if isinstance(value, (float, np.floating)):
            value = fmt(value)
        parts.append(f'{key.replace("_", "-")}="{value}"')
    return ' '.join(parts)


class Canvas:
    """
    one panel; elements are kept in world coordinates and mapped to the
    panel when rendered, y pointing up

    parameters:
    -----------
    width, height: panel size in pixels
    margin: pixels kept free around the data
    title: optional caption drawn at the top
    """

    def __init__(self, width=480, height=480, margin=24, title=None):
        self.width = width
        self.height = height
        self.margin = margin
        self.title = title
        self.elements = []

    def scatter(self, points, radius=2.0, color=PALETTE[0], opacity=1.0):
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        for z in points:
            self.elements.append(('dot', complex(z), radius, color, opacity))
        return self

    def polyline(self, points, color='#444444', width=1.0, dash=None):
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        if points.size >= 2:
            self.elements.append(('line', points, width, color, dash))
        return self

    def disk(self, center, radius, color='#999999', opacity=0.3):
        """circle of the given radius in world units"""
        self.elements.append(('disk', complex(center), float(radius), color, opacity))
        return self

    def bounds(self):
        xs, ys = [], []
        for element in self.elements:
            if element[0] == 'line':
                xs.extend(element[1].real)
                ys.extend(element[1].imag)
            elif element[0] == 'disk':
                z, r = element[1], element[2]
                xs.extend([z.real - r, z.real + r])
                ys.extend([z.imag - r, z.imag + r])
            else:
                xs.append(element[1].real)
                ys.append(element[1].imag)
        if not xs:
            return -1.0, 1.0, -1.0, 1.0
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        # equal aspect, square data window
        span = max(x1 - x0, y1 - y0, 1e-9)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        return cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2

    def _mapper(self):
        x0, x1, y0, y1 = self.bounds()
        top = self.margin + (16 if self.title else 0)
        inner = min(self.width - 2 * self.margin, self.height - top - self.margin)
        scale = inner / (x1 - x0)

        def to_screen(z):
            return self.margin + (z.real - x0) * scale, top + (y1 - z.imag) * scale

        return to_screen, scale

    def body(self):
        to_screen, scale = self._mapper()
        lines = []
        if self.title:
            lines.append(
                f'<text {props_repr(dict(x=float(self.margin), y=16.0, font_size=12, font_family="sans-serif"))}>'
                f'{self.title}</text>'
            )
        for element in self.elements:
            kind = element[0]
            if kind == 'line':
                _, points, width, color, dash = element
                coords = ' '.join(
                    f'{fmt(x)},{fmt(y)}' for x, y in (to_screen(z) for z in points)
                )
                props = dict(points=coords, fill='none', stroke=color, stroke_width=float(width))
                if dash:
                    props['stroke_dasharray'] = dash
                lines.append(f'<polyline {props_repr(props)}/>')
            elif kind == 'disk':
                _, z, r, color, opacity = element
                x, y = to_screen(z)
                props = dict(cx=x, cy=y, r=r * scale, fill=color, fill_opacity=float(opacity))
                lines.append(f'<circle {props_repr(props)}/>')
            else:
                _, z, r, color, opacity = element
                x, y = to_screen(z)
                props = dict(cx=x, cy=y, r=float(r), fill=color, fill_opacity=float(opacity))
                lines.append(f'<circle {props_repr(props)}/>')
        return lines

    def render(self):
        return document([(0, 0, self)], self.width, self.height)


def document(panels, width, height):
    """panels: (x, y, Canvas) placed as nested svg elements"""
    head = f'<svg {props_repr(dict(xmlns=SVG_NS, width=width, height=height))}>'
    lines = [head, f'<rect {props_repr(dict(width=width, height=height, fill="white"))}/>']
    for x, y, canvas in panels:
        lines.append(
            f'<svg {props_repr(dict(x=x, y=y, width=canvas.width, height=canvas.height))}>'
        )
        lines.extend('  ' + line for line in canvas.body())
        lines.append('</svg>')
    lines.append('</svg>')
    return '\n'.join(lines) + '\n'


def grid(canvases, columns=5):
    """several panels in rows of `columns`"""
    if not canvases:
        return document([], 10, 10)
    w = max(c.width for c in canvases)
    h = max(c.height for c in canvases)
    panels = [
        ((i % columns) * w, (i // columns) * h, c) for i, c in enumerate(canvases)
    ]
    rows = (len(canvases) + columns - 1) // columns
    return document(panels, w * min(columns, len(canvases)), h * rows)


def side_by_side(left, right):
    return grid([left, right], columns=2)
