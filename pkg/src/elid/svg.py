"""Schematic SVG 1.1 diagrams of a placement plan.

Output is a pure function of the inputs: fixed canvas, fixed number
formatting, no timestamps.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .geometry import along_road_coverage, blind_zone, elid_footprint, occlusion_shadow

HEADER = (
    '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
    '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
    '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n'
)


def _f(x):
    return f"{x:.2f}"


class _Canvas:
    def __init__(self, width, height, title):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n',
            f"<title>{escape(title)}</title>\n",
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n',
        ]

    def rect(self, x, y, w, h, fill, extra=""):
        self.parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(max(w, 0))}" height="{_f(max(h, 0))}" '
            f'fill="{fill}"{extra}/>\n')

    def line(self, x1, y1, x2, y2, stroke, width=1.0, extra=""):
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{stroke}" stroke-width="{_f(width)}"{extra}/>\n')

    def polygon(self, pts, fill, extra=""):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(f'<polygon points="{coords}" fill="{fill}"{extra}/>\n')

    def circle(self, x, y, r, fill):
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill}"/>\n')

    def text(self, x, y, s, size=11, anchor="start"):
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{escape(s)}</text>\n')

    def render(self):
        return HEADER + "".join(self.parts) + "</svg>\n"


def side_view(unit, corridor, mount, truck_height=4.0, truck_length=12.0):
    """One mast in profile: FoV wedges, footprint, blind zone and a truck shadow."""
    W, H, pad = 900, 320, 40
    reach = along_road_coverage(unit.spec, unit.elevation, mount)
    blind = blind_zone(unit.spec, unit.elevation, mount)
    sx = (W - 2 * pad) / (2 * reach)
    exaggeration = max(1.0, (H - 120) / (unit.elevation * sx))
    sy = sx * exaggeration
    ground = H - 60
    cx = W / 2

    def X(d):
        return cx + d * sx

    def Y(h):
        return ground - h * sy

    c = _Canvas(W, H, f"side view: {unit.spec.name} at {unit.position:.2f} m")
    sensor = (X(0), Y(unit.elevation))
    for sign in (-1, 1):
        near, far = sign * blind, sign * reach
        c.polygon([sensor, (X(near), Y(0)), (X(far), Y(0))], "#9ecae1", ' fill-opacity="0.5"')
    c.line(pad - 10, ground, W - pad + 10, ground, "#333333", 2)
    c.rect(X(-reach), ground, 2 * reach * sx, 6, "#31a354")
    if blind > 0:
        c.rect(X(-blind), ground, 2 * blind * sx, 6, "#de2d26")
    c.line(X(0), ground, sensor[0], sensor[1], "#636363", 3)
    c.circle(sensor[0], sensor[1], 5, "#08519c")

    if truck_height < unit.elevation:
        far_edge = blind + 0.5 * (reach - blind)
        shadow = occlusion_shadow(unit.elevation, truck_height, far_edge)
        c.polygon([sensor, (X(far_edge), Y(truck_height)),
                   (X(min(far_edge + shadow, reach)), Y(0))], "#000000", ' fill-opacity="0.12"')
        c.rect(X(far_edge - truck_length), Y(truck_height), truck_length * sx,
               truck_height * sy, "#fd8d3c")
        c.rect(X(far_edge), ground - 3, shadow * sx, 3, "#756bb1")
        c.text(X(far_edge + shadow / 2), ground + 38,
               f"shadow {shadow:.2f} m behind {truck_height:.1f} m truck", 10, "middle")

    c.text(sensor[0] + 8, sensor[1] - 6, f"elevation {unit.elevation:.2f} m", 12)
    c.text(X(-reach), ground + 22, f"-{reach:.2f} m", 10)
    c.text(X(reach), ground + 22, f"+{reach:.2f} m", 10, "end")
    c.text(pad, 24, f"{unit.spec.name}: footprint {2 * (reach - blind):.2f} m, "
                    f"blind zone {blind:.2f} m per side, vertical scale x{exaggeration:.1f}", 13)
    return c.render()


def top_view(plan, corridor):
    """The whole corridor from above: masts, footprints and gaps."""
    W, H, pad = 1000, 180, 30
    sx = (W - 2 * pad) / corridor.length
    top, lane_h = 60, 10
    road_h = corridor.lanes * lane_h

    def X(x):
        return pad + x * sx

    c = _Canvas(W, H, f"top view: {plan.total_units} units on {corridor.length:.0f} m")
    c.rect(X(0), top, corridor.length * sx, road_h, "#d9d9d9")
    for k in range(1, corridor.lanes):
        c.line(X(0), top + k * lane_h, X(corridor.length), top + k * lane_h, "#ffffff", 1,
               ' stroke-dasharray="6,4"')
    colors = ("#3182bd", "#31a354")
    for i, u in enumerate(plan.units):
        fp = elid_footprint(u, corridor, plan.mount)
        y = top + road_h + 8 + (i % 2) * 10
        for a, b in fp.visible_segments():
            c.rect(X(a), y, (b - a) * sx, 8, colors[i % 2], ' fill-opacity="0.7"')
        for a, b in fp.blind_intervals:
            c.rect(X(a), y, (b - a) * sx, 8, "#de2d26")
        c.circle(X(u.position), top + road_h / 2, 4, "#08519c")
    for a, b in plan.gaps:
        c.rect(X(a), top - 12, (b - a) * sx, road_h + 24, "#de2d26", ' fill-opacity="0.25"')
    c.text(pad, 24, f"{plan.total_units} ELiDs, {plan.total_sensors} sensors, "
                    f"{len(plan.gaps)} gaps", 13)
    c.text(X(0), H - 12, "0 m", 10)
    c.text(X(corridor.length), H - 12, f"{corridor.length:.0f} m", 10, "end")
    return c.render()
