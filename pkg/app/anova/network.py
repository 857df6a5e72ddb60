"""
DOT rendering of an explainable ANOVA network: variables feed the terms
that contain them, all terms feed the sum node.
"""
from app.anova.grouped_index import term_id
from app.anova.sensitivity import FitResult

DISPLAY_THRESHOLD = 0.01


def emit_anova_network(fit: FitResult, display_threshold: float = DISPLAY_THRESHOLD,
                       name: str = "anova") -> str:
    """DOT graph annotated with the GSI of every term; terms below display_threshold are faint."""
    term_set = fit.term_set
    lines = [
        f"digraph {name} {{",
        "  rankdir=LR;",
        "  node [fontname=\"Helvetica\"];",
    ]
    for j in range(1, term_set.d + 1):
        lines.append(f"  x{j} [shape=circle, label=\"x{j}\"];")
    for u, gsi in zip(term_set, fit.gsi):
        tid = term_id(u)
        label = f"f_{{{tid}}}" if u else "f_const"
        style = "" if (not u or gsi >= display_threshold) else ", style=dashed, color=gray70, fontcolor=gray70"
        lines.append(f"  \"t_{tid}\" [shape=box, label=\"{label}\\n{gsi:.4f}\"{style}];")
    lines.append("  sum [shape=doublecircle, label=\"+\"];")
    for u in term_set:
        for j in u:
            lines.append(f"  x{j} -> \"t_{term_id(u)}\";")
    for u in term_set:
        lines.append(f"  \"t_{term_id(u)}\" -> sum;")
    lines.append("}")
    return "\n".join(lines) + "\n"
