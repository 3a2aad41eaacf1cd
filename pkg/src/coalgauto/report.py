"""Figures for CLI reports, drawn with matplotlib's Agg backend."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402

from .functor_kernel import base, show_atom  # noqa: E402

WIN_COLOR = {"E": "#4c9a6a", "A": "#c8553d", None: "#b0b0b0"}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def draw_graph(nodes, edges, path, title, color=None, labels=None, shapes=None):
    """Directed graph; color maps nodes to a fill color, shapes to 'o' or 's'."""
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    pos = nx.spring_layout(g, seed=1) if len(g) > 1 else {n: (0, 0) for n in g}
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    color = color or {}
    shapes = shapes or {}
    for shape in set(shapes.values()) | {"o"}:
        group = [n for n in g if shapes.get(n, "o") == shape]
        nx.draw_networkx_nodes(g, pos, nodelist=group, node_shape=shape, ax=ax,
                               node_color=[color.get(n, "#8fb3d9") for n in group],
                               node_size=650, edgecolors="black", linewidths=0.6)
    nx.draw_networkx_edges(g, pos, ax=ax, arrows=True, arrowsize=12,
                           connectionstyle="arc3,rad=0.08", node_size=650)
    nx.draw_networkx_labels(g, pos, ax=ax, font_size=8,
                            labels=labels or {n: show_atom(n) for n in g})
    ax.set_title(title)
    ax.axis("off")
    return _save(fig, path)


def draw_coalgebra(P, path, title, highlight=()):
    S = P.coalgebra
    edges = [(s, t) for s in S.states for t in base(S.functor, S.sigma[s])]
    color = {s: ("#f2c14e" if s == P.point else
                 "#4c9a6a" if s in highlight else "#8fb3d9") for s in S.states}
    return draw_graph(S.states, edges, path, title, color=color)


def draw_game(game, solution, path, title):
    color = {v: WIN_COLOR[solution.winner(v)] for v in game.positions}
    shapes = {v: ("o" if game.owner[v] == "E" else "s") for v in game.positions}
    labels = {v: f"{show_atom(v)}\n{game.priority[v]}" for v in game.positions}
    edges = [(v, w) for v in game.positions for w in game.edges[v]]
    return draw_graph(game.positions, edges, path, title, color, labels, shapes)


def draw_bars(values, path, title, ylabel, log=False):
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    names = list(values)
    ax.bar(names, [values[k] for k in names], color="#5b7db1")
    if log:
        ax.set_yscale("log")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=30)
    return _save(fig, path)
