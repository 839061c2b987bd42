"""SVG maps of reserve solutions: core parcels dark, buffer parcels light."""
from __future__ import annotations

from typing import Optional
from xml.sax.saxutils import escape

import networkx as nx
import numpy as np

from .instance import Instance
from .solution import Solution

CORE_FILL = "#1b5e20"
BUFFER_FILL = "#a5d6a7"
EMPTY_FILL = "#ffffff"
STROKE = "#424242"
CELL = 24
MARGIN = 12


def _grid_positions(inst: Instance) -> np.ndarray:
    rows, cols = inst.grid_shape
    idx = np.arange(inst.n_nodes)
    return np.column_stack([idx % cols, idx // cols]).astype(float)


def _spring_positions(inst: Instance, seed: int) -> np.ndarray:
    g = nx.Graph()
    g.add_nodes_from(range(inst.n_nodes))
    g.add_edges_from(map(tuple, inst.edges.tolist()))
    pos = nx.spring_layout(g, seed=seed)
    xy = np.array([pos[i] for i in range(inst.n_nodes)], dtype=float)
    if len(xy) == 0:
        return xy
    span = np.ptp(xy, axis=0)
    span[span == 0] = 1.0
    side = max(1.0, np.sqrt(inst.n_nodes) - 1)
    return (xy - xy.min(axis=0)) / span * side


def node_fill(i: int, sol: Solution) -> str:
    if i in sol.core:
        return CORE_FILL
    if i in sol.reserve:
        return BUFFER_FILL
    return EMPTY_FILL


def render_solution(inst: Instance, sol: Optional[Solution] = None, layout: str = "grid", *,
                    seed: int = 0, title: str = "") -> str:
    """SVG text of a solution.

    ``layout="grid"`` draws one square per parcel (instances with a grid
    shape only); ``"force"`` draws nodes and edges with a seeded spring
    layout. Output is byte-identical for identical inputs.
    """
    sol = sol if sol is not None else Solution(frozenset(), frozenset(), frozenset(), frozenset(), 0.0)
    if layout == "grid" and inst.grid_shape is None:
        raise ValueError("grid layout needs an instance with a grid shape")
    if layout not in ("grid", "force"):
        raise ValueError(f"unknown layout {layout!r}")
    pos = _grid_positions(inst) if layout == "grid" else _spring_positions(inst, seed)
    extent = pos.max(axis=0) + 1 if len(pos) else np.array([1.0, 1.0])
    header = 18 if title else 0
    width = int(extent[0] * CELL + 2 * MARGIN)
    height = int(extent[1] * CELL + 2 * MARGIN + header)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#fafafa"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN + 8}" font-family="sans-serif" font-size="12">'
                   f"{escape(title)}</text>")
    ox, oy = MARGIN, MARGIN + header

    def centre(i):
        return ox + (pos[i, 0] + 0.5) * CELL, oy + (pos[i, 1] + 0.5) * CELL

    if layout == "grid":
        for i in range(inst.n_nodes):
            x, y = ox + pos[i, 0] * CELL, oy + pos[i, 1] * CELL
            out.append(f'<rect class="parcel" data-node="{i}" x="{x:.1f}" y="{y:.1f}" width="{CELL}" '
                       f'height="{CELL}" fill="{node_fill(i, sol)}" stroke="{STROKE}" stroke-width="0.5"/>')
    else:
        for a, b in inst.edges.tolist():
            (x1, y1), (x2, y2) = centre(a), centre(b)
            out.append(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                       f'stroke="#bdbdbd" stroke-width="1"/>')
        for i in range(inst.n_nodes):
            x, y = centre(i)
            out.append(f'<circle class="parcel" data-node="{i}" cx="{x:.1f}" cy="{y:.1f}" r="{CELL * 0.3:.1f}" '
                       f'fill="{node_fill(i, sol)}" stroke="{STROKE}" stroke-width="1"/>')
    for i in sorted(sol.roots):
        x, y = centre(i)
        out.append(f'<circle class="root" cx="{x:.1f}" cy="{y:.1f}" r="3" fill="#ffeb3b"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
