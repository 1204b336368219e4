"""Static SVG plots for experiment tables.

A convenience layer only: figures are rendered from the already-written
rows, never the other way round, and nothing downstream depends on
pixels.  Requires matplotlib (install the ``plot`` extra).
"""

from __future__ import annotations

from pathlib import Path


def _pivot(header: list[str], rows: list[list], *keys: str) -> dict:
    idx = [header.index(k) for k in keys]
    out: dict = {}
    for row in rows:
        out.setdefault(tuple(row[i] for i in idx[:-1]), []).append(row[idx[-1]])
    return out


def render(kind: str, header: list[str], rows: list[list], path: Path) -> None:
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError(
            "plotting requires matplotlib; install the 'plot' extra"
        ) from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if kind == "participation-map":
        i_rule, i_c = header.index("rule"), header.index("cost")
        i_v, i_u = header.index("true_variance"), header.index("utility_mean")
        rules = sorted({r[i_rule] for r in rows})
        fig, axes = plt.subplots(1, len(rules), figsize=(5.0 * len(rules), 4.0))
        axes = [axes] if len(rules) == 1 else list(axes)
        for ax_r, rule in zip(axes, rules):
            sub = [r for r in rows if r[i_rule] == rule]
            sc = ax_r.scatter(
                [r[i_c] for r in sub], [r[i_v] for r in sub],
                c=[r[i_u] for r in sub], cmap="RdYlGn", marker="s", s=150,
            )
            ax_r.set_title(rule)
            ax_r.set_xlabel("cost")
            ax_r.set_ylabel("true variance")
            fig.colorbar(sc, ax=ax_r, label="winning utility at optimum")
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)
        return

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if kind == "best-response":
        xs = _pivot(header, rows, "rule", "beta", "true_variance", "reported_variance")
        ys = _pivot(header, rows, "rule", "beta", "true_variance", "utility_mean")
        for group in sorted(xs):
            rule, beta, true_v = group
            ax.plot(xs[group], ys[group], label=f"{rule}, beta={beta:g}, true={true_v:g}", lw=1)
        ax.set_xlabel("reported variance")
        ax.set_ylabel("interim expected utility")
        ax.legend(fontsize=5, ncol=2)
    elif kind == "kappa-curve":
        xs = _pivot(header, rows, "m", "s")
        ys = _pivot(header, rows, "m", "kappa_hat")
        for (m,) in sorted(xs):
            ax.plot(xs[(m,)], ys[(m,)], marker="o", ms=3, label=f"m={m}")
        ax.set_xlabel("score s")
        ax.set_ylabel("winning advantage ratio")
        ax.legend()
    elif kind == "failure-prob":
        xs = _pivot(header, rows, "rule", "n")
        ys = _pivot(header, rows, "rule", "failure_prob")
        for (rule,) in sorted(xs):
            ax.plot(xs[(rule,)], ys[(rule,)], marker="o", label=rule)
        ax.set_xlabel("sample size n")
        ax.set_ylabel("truthful failure frequency")
        ax.legend()
    elif kind == "slack-bounds":
        xs = _pivot(header, rows, "beta")  # single group: all betas
        i_b, i_lo, i_hi = header.index("beta"), header.index("slack_lower"), header.index("slack_upper")
        betas = [r[i_b] for r in rows]
        ax.loglog(betas, [r[i_lo] for r in rows], marker="o", label="downward slack")
        ax.loglog(betas, [r[i_hi] for r in rows], marker="s", label="upward slack")
        ax.set_xlabel("beta")
        ax.set_ylabel("reporting slack")
        ax.legend()
    elif kind == "auction":
        i_s, i_w = header.index("score"), header.index("is_winner")
        scores = [r[i_s] for r in rows]
        colors = ["tab:green" if r[i_w] else "tab:gray" for r in rows]
        ax.bar(range(len(rows)), scores, color=colors)
        ax.set_xlabel("agent")
        ax.set_ylabel("score (price per information)")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
