# ReportView.py
import os
from typing import Any, Dict, List

from logic.util.format_report_output import format_report_output


class ReportView:
    """
    レポートを JSON (主) とテキストの表 (派生) の2形式で書き出すクラス。
    """

    def __init__(self, report: Dict[str, Any], name: str):
        self.report = report
        self.name = name

    def render(self, out_dir: str) -> List[str]:
        paths = []
        for format_type, ext in (("JSON", "json"), ("TEXT", "txt")):
            path = os.path.join(out_dir, f"{self.name}.{ext}")
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(format_report_output(self.report, format_type))
                f.write("\n")
            paths.append(path)
        return paths
