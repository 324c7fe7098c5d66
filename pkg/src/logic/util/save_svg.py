# save_svg.py
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# SVG 内の id を固定して同じ入力から同じバイト列を出す
matplotlib.rcParams["svg.hashsalt"] = "inner"


def save_svg(fig, path: str) -> None:
    """
    Figure を日付メタデータなしの SVG で保存して閉じる。

    Args:
        fig: matplotlib の Figure。
        path: 出力先パス。
    """
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
