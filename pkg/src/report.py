import html
import json
from datetime import datetime
from pathlib import Path
from typing import List

import pandas as pd
from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib.units import cm
from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, Table, TableStyle, PageBreak

from .config import config
from .runner import RunReport, quantities_frame, reports_frame

VERDICT_COLORS = {"pass": "#276749", "fail": "#c53030", "inconclusive": "#b7791f"}


def report_json(report: RunReport, include_timing: bool = True) -> str:
    data = report.to_dict() if include_timing else report.body()
    return json.dumps(data, indent=2, sort_keys=True)


def write_json(report: RunReport, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_json(report) + "\n", encoding='utf-8')
    return path


def read_json(path: Path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text(encoding='utf-8')))


def write_csv(table: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.12g")
    return path


def _timestamped(prefix: str, suffix: str) -> str:
    return f"{prefix}_{datetime.now().strftime('%Y%m%d_%H%M%S')}.{suffix}"


class ReportGenerator:
    """PDF summary of one or more runs: totals, verdict table, entropy/Fisher table."""

    def __init__(self, output_dir: Path = None):
        self.output_dir = Path(output_dir) if output_dir else config.paths.ensure_output_dir()
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.styles = getSampleStyleSheet()
        self._setup_styles()

    def _setup_styles(self):
        self.styles.add(ParagraphStyle(
            name='CustomTitle',
            parent=self.styles['Heading1'],
            fontSize=22,
            spaceAfter=20,
            alignment=TA_CENTER,
            textColor=colors.HexColor('#1a365d')
        ))

        self.styles.add(ParagraphStyle(
            name='SectionTitle',
            parent=self.styles['Heading2'],
            fontSize=15,
            spaceBefore=16,
            spaceAfter=8,
            textColor=colors.HexColor('#2c5282')
        ))

        self.styles.add(ParagraphStyle(
            name='Footer',
            parent=self.styles['Normal'],
            fontSize=8,
            alignment=TA_CENTER,
            textColor=colors.gray
        ))

    def generate(self, runs: List[RunReport], filename: str = None) -> Path:
        filepath = self.output_dir / (filename or _timestamped("epiq_report", "pdf"))

        doc = SimpleDocTemplate(
            str(filepath),
            pagesize=landscape(A4),
            rightMargin=1.2 * cm,
            leftMargin=1.2 * cm,
            topMargin=1.2 * cm,
            bottomMargin=1.2 * cm
        )

        story = [Paragraph("Conditional EPI verification", self.styles['CustomTitle'])]
        story.extend(self._build_summary_section(runs))

        for run in runs:
            story.append(PageBreak())
            story.extend(self._build_run_section(run))

        story.extend(self._build_footer())
        doc.build(story)
        return filepath

    def _table(self, data: List[List[str]], col_widths=None) -> Table:
        table = Table(data, colWidths=col_widths, repeatRows=1)
        table.setStyle(TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#2c5282')),
            ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTSIZE', (0, 0), (-1, 0), 9),
            ('BACKGROUND', (0, 1), (-1, -1), colors.HexColor('#f7fafc')),
            ('TEXTCOLOR', (0, 1), (-1, -1), colors.HexColor('#2d3748')),
            ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
            ('FONTSIZE', (0, 1), (-1, -1), 8),
            ('GRID', (0, 0), (-1, -1), 0.5, colors.HexColor('#e2e8f0')),
            ('VALIGN', (0, 0), (-1, -1), 'MIDDLE'),
        ]))
        return table

    def _build_summary_section(self, runs: List[RunReport]) -> List:
        data = [["Scenario", "Checks", "Pass", "Fail", "Inconclusive", "Errors", "Exit", "Time (s)"]]
        for run in runs:
            s = run.summary()
            data.append([
                run.scenario.get("name", ""), str(s["checks"]), str(s["passed"]), str(s["failed"]),
                str(s["inconclusive"]), str(s["errors"]), str(s["exit_code"]), f"{run.wall_clock:.1f}",
            ])
        return [Paragraph("Summary", self.styles['SectionTitle']), self._table(data)]

    def _build_run_section(self, run: RunReport) -> List:
        elements = [Paragraph(run.scenario.get("name", ""), self.styles['SectionTitle'])]
        if run.scenario.get("description"):
            elements.append(Paragraph(run.scenario["description"], self.styles['Normal']))
        elements.append(Spacer(1, 0.3 * cm))

        frame = reports_frame(run)
        data = [list(frame.columns)]
        for row in frame.itertuples(index=False):
            data.append([row.state, row.check, row.verdict] + [f"{v:.6g}" for v in row[3:]])
        table = self._table(data)
        for i, verdict in enumerate(frame["verdict"], start=1):
            table.setStyle(TableStyle([('TEXTCOLOR', (2, i), (2, i), colors.HexColor(VERDICT_COLORS[verdict]))]))
        elements.append(table)

        quantities = quantities_frame(run)
        if not quantities.empty:
            elements.append(Paragraph("Entropies and Fisher information", self.styles['Heading3']))
            rows = [list(quantities.columns)]
            rows.extend([r.state, r.quantity, f"{r.value:.8g}", f"{r.error_bar:.2g}"]
                        for r in quantities.itertuples(index=False))
            elements.append(self._table(rows))

        for error in run.errors:
            text = html.escape(f"{error.get('state')} / {error.get('check')}: "
                               f"{error.get('error_type')} {error.get('message')}")
            elements.append(Paragraph(text, self.styles['Normal']))
        return elements

    def _build_footer(self) -> List:
        return [
            Spacer(1, 1 * cm),
            Paragraph(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}", self.styles['Footer']),
        ]


class HTMLReportGenerator:

    def __init__(self, output_dir: Path = None):
        self.output_dir = Path(output_dir) if output_dir else config.paths.ensure_output_dir()
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def generate(self, runs: List[RunReport], filename: str = None) -> Path:
        filepath = self.output_dir / (filename or _timestamped("epiq_report", "html"))

        html_parts = [self._header(), self._summary(runs)]
        for run in runs:
            html_parts.append(self._run_section(run))
        html_parts.append(self._footer())

        with open(filepath, 'w', encoding='utf-8') as f:
            f.write('\n'.join(html_parts))

        return filepath

    def _header(self) -> str:
        return """
<!DOCTYPE html>
<html lang="en">
<head>
    <meta charset="UTF-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <title>Conditional EPI verification</title>
    <style>
        * { box-sizing: border-box; }
        body { font-family: 'Segoe UI', Tahoma, sans-serif; margin: 0; padding: 20px; background: #edf2f7; }
        .container { max-width: 1400px; margin: 0 auto; background: white; padding: 40px; border-radius: 12px; }
        h1 { color: #1a365d; text-align: center; }
        h2 { color: #2c5282; border-bottom: 3px solid #4299e1; padding-bottom: 10px; margin-top: 40px; }
        .summary-grid { display: grid; grid-template-columns: repeat(auto-fit, minmax(180px, 1fr)); gap: 20px; }
        .summary-card { background: #2c5282; color: white; padding: 20px; border-radius: 10px; text-align: center; }
        .summary-card .value { font-size: 1.8em; font-weight: bold; }
        .summary-card .label { font-size: 0.9em; opacity: 0.9; }
        .run-section { background: #f8fafc; padding: 25px; border-radius: 10px; margin: 25px 0;
                       border-left: 4px solid #4299e1; }
        table { border-collapse: collapse; font-size: 0.85em; margin: 10px 0; }
        th, td { border: 1px solid #e2e8f0; padding: 4px 8px; text-align: right; }
        th { background: #2c5282; color: white; }
        .pass { color: #276749; } .fail { color: #c53030; font-weight: bold; } .inconclusive { color: #b7791f; }
        .errors { background: #fff5f5; padding: 15px; border-radius: 8px; }
        .footer { text-align: center; color: #718096; margin-top: 50px; font-size: 0.9em; }
    </style>
</head>
<body>
<div class="container">
    <h1>Conditional EPI verification</h1>
"""

    def _summary(self, runs: List[RunReport]) -> str:
        totals = {"checks": 0, "passed": 0, "failed": 0, "inconclusive": 0, "errors": 0}
        for run in runs:
            summary = run.summary()
            for key in totals:
                totals[key] += summary[key]
        cards = "".join(
            f'<div class="summary-card"><div class="value">{value}</div><div class="label">{label}</div></div>'
            for label, value in totals.items()
        )
        return f'<div class="summary-grid">{cards}</div>'

    def _run_section(self, run: RunReport) -> str:
        name = html.escape(run.scenario.get("name", ""))
        frame = reports_frame(run)
        frame["verdict"] = [f'<span class="{v}">{v}</span>' for v in frame["verdict"]]
        verdicts = frame.to_html(index=False, escape=False, float_format=lambda v: f"{v:.6g}")

        quantities = quantities_frame(run)
        quantities_html = ""
        if not quantities.empty:
            table = quantities.to_html(index=False, float_format=lambda v: f"{v:.8g}")
            quantities_html = f"<h3>Entropies and Fisher information</h3>{table}"

        errors_html = ""
        if run.errors:
            items = "".join(
                f"<li>{html.escape(str(e.get('state')))} / {html.escape(str(e.get('check')))}: "
                f"<strong>{html.escape(str(e.get('error_type')))}</strong> {html.escape(str(e.get('message')))}</li>"
                for e in run.errors
            )
            errors_html = f'<div class="errors"><h4>Errors</h4><ul>{items}</ul></div>'

        return f"""
    <div class="run-section" id="{name}">
        <h2>{name}</h2>
        <p>{html.escape(run.scenario.get("description", ""))}</p>
        <p>seed {run.seed}, exit code {run.exit_code}, {run.wall_clock:.1f}s</p>
        {verdicts}
        {quantities_html}
        {errors_html}
    </div>
"""

    def _footer(self) -> str:
        return f"""
    <div class="footer">
        <p><strong>Generated:</strong> {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}</p>
    </div>
</div>
</body>
</html>
"""
