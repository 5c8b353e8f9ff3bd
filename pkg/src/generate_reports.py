"""
generate_reports.py - Persistence and report generation

Central-value CSV store (bit-exact resume), moment report CSV and SVG chart,
diagnostic CSV and a styled Excel workbook of the diagnostic rows.
Outputs carry no timestamps so reruns are byte-identical.
"""

import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import pandas as pd
import openpyxl
from openpyxl.styles import Font, PatternFill, Alignment, Border, Side

try:
    from .lvalue import CentralValue
except ImportError:
    from lvalue import CentralValue

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'

CENTRAL_VALUE_COLUMNS = ['d', 'form_label', 'epsilon', 'L_half', 'L1_chi', 'N_cut',
                         'scale', 'odd_residual']

DIAGNOSTIC_COLUMNS = ['check', 'param_json', 'lhs', 'rhs', 'ratio', 'pass']


def _atomic_write(path, write) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


# ---------------------------------------------------------------------------
# Central values
# ---------------------------------------------------------------------------

def central_values_frame(values: Iterable[CentralValue]) -> pd.DataFrame:
    """One row per (d, form), ordered by |d| then label."""
    df = pd.DataFrame([cv.__dict__ for cv in values], columns=CENTRAL_VALUE_COLUMNS)
    if df.empty:
        return df
    df['abs_d'] = df['d'].abs()
    df = df.sort_values(['abs_d', 'form_label'], kind='mergesort').drop(columns='abs_d')
    return df.reset_index(drop=True)


def write_central_values(path, values: Iterable[CentralValue]) -> Path:
    """Rewrite the central-value store atomically."""
    df = central_values_frame(values)
    out = _atomic_write(path, lambda tmp: df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))
    logger.debug(f"stored {len(df)} central values in {out}")
    return out


def read_central_values(path) -> Dict[Tuple[int, str], CentralValue]:
    """
    Load the central-value store.

    Raises:
        FileNotFoundError: If the store doesn't exist
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Central value store not found: {path}")
    df = pd.read_csv(path, float_precision='round_trip', dtype={'form_label': str})
    out = {}
    for row in df.itertuples(index=False):
        cv = CentralValue(int(row.d), str(row.form_label), int(row.epsilon), float(row.L_half),
                          float(row.L1_chi), int(row.N_cut), float(row.scale),
                          float(row.odd_residual))
        out[(cv.d, cv.form_label)] = cv
    return out


def format_central_value(cv: CentralValue) -> str:
    """The d,epsilon,L_half,L1_chi,N_cut row printed by the lvalue command."""
    return f"{cv.d},{cv.epsilon},{cv.L_half!r},{cv.L1_chi!r},{cv.N_cut}"


# ---------------------------------------------------------------------------
# Moment reports
# ---------------------------------------------------------------------------

def moment_report_frame(reports: Sequence[Any]) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for report in reports:
        rows.extend(report.as_records())
    return pd.DataFrame(rows)


def write_moment_report(path, reports: Sequence[Any]) -> Path:
    """CSV with one row per run and block."""
    df = moment_report_frame(reports)
    return _atomic_write(path, lambda tmp: df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))


def plot_moment_report(path, reports: Sequence[Any]) -> Path:
    """
    SVG line chart of log S(D) against log log D with a reference line of the
    predicted slope through the first point.
    """
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    plt.rcParams['svg.hashsalt'] = 'symcube'
    fig, ax = plt.subplots(figsize=(7, 4.5))
    plotted = False
    for report in reports:
        pts = [(math.log(math.log(b.D)), math.log(b.S)) for b in report.blocks if b.S > 0]
        if not pts:
            logger.warning(f"run '{report.run}': S(D) vanishes on every block, nothing to plot")
            continue
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker='o', label=f"{report.run}: log S(D)")
        ax.plot(xs, [ys[0] + report.predicted_S * (x - xs[0]) for x in xs], '--',
                label=f"{report.run}: slope {report.predicted_S:g}")
        plotted = True
    if not plotted:
        ax.text(0.5, 0.5, "S(D) = 0 on every block", ha='center', va='center',
                transform=ax.transAxes)
    ax.set_xlabel('log log D')
    ax.set_ylabel('log S(D)')
    ax.set_title('Mixed moment against log log D')
    if plotted:
        ax.legend(loc='best', fontsize=8)
    fig.tight_layout()

    def save(tmp):
        fig.savefig(tmp, format='svg', metadata={'Date': None})

    try:
        return _atomic_write(path, save)
    finally:
        plt.close(fig)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def diagnostics_frame(rows: Sequence[Any]) -> pd.DataFrame:
    return pd.DataFrame([row.as_record() for row in rows], columns=DIAGNOSTIC_COLUMNS)


def write_diagnostics(path, rows: Sequence[Any]) -> Path:
    """CSV `check,param_json,lhs,rhs,ratio,pass`, one row per executed check."""
    df = diagnostics_frame(rows)
    return _atomic_write(path, lambda tmp: df.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))


class ReportGenerator:
    """
    Excel workbook of diagnostic rows with PASS/FAIL status colours.

    Attributes:
        title: Title printed in the header row
    """

    # Color scheme for status indicators
    COLORS = {
        'PASS': '90EE90',      # Light green
        'FAIL': 'FFB6C1',      # Light red
        'INFO': 'FFD580',      # Light orange
        'HEADER': '4472C4',    # Blue
        'SUBHEADER': '70AD47', # Green
    }

    THIN = Border(left=Side(style='thin'), right=Side(style='thin'),
                  top=Side(style='thin'), bottom=Side(style='thin'))

    def __init__(self, title: str = 'SYM-CUBE DIAGNOSTICS'):
        self.title = title

    def _fill(self, key: str) -> PatternFill:
        return PatternFill(start_color=self.COLORS[key], end_color=self.COLORS[key],
                           fill_type='solid')

    def generate_diagnostics_workbook(self, rows: Sequence[Any], output_path) -> Path:
        """
        Write one sheet of diagnostics and one summary sheet.

        Args:
            rows: DiagnosticRow objects
            output_path: Destination .xlsx path
        """
        wb = openpyxl.Workbook()
        wb.remove(wb.active)
        self._create_summary_sheet(wb, rows)
        self._create_checks_sheet(wb, rows)
        return _atomic_write(output_path, wb.save)

    def _create_summary_sheet(self, workbook: openpyxl.Workbook, rows: Sequence[Any]) -> None:
        ws = workbook.create_sheet("Summary", 0)
        ws['A1'] = self.title
        ws['A1'].font = Font(size=16, bold=True, color='FFFFFF')
        ws['A1'].fill = self._fill('HEADER')
        ws['A1'].alignment = Alignment(horizontal='center', vertical='center')
        ws.merge_cells('A1:D1')
        ws.row_dimensions[1].height = 26

        headers = ['Check', 'Executed', 'Failed (hard)', 'Status']
        for col, header in enumerate(headers, start=1):
            cell = ws.cell(row=3, column=col, value=header)
            cell.font = Font(bold=True, color='FFFFFF')
            cell.fill = self._fill('SUBHEADER')
            cell.border = self.THIN

        names = sorted({row.check for row in rows})
        for r, name in enumerate(names, start=4):
            group = [row for row in rows if row.check == name]
            failed = sum(1 for row in group if row.hard and not row.passed)
            hard = any(row.hard for row in group)
            status = 'INFO' if not hard else ('PASS' if failed == 0 else 'FAIL')
            for col, value in enumerate([name, len(group), failed, status], start=1):
                cell = ws.cell(row=r, column=col, value=value)
                cell.border = self.THIN
                if col == 4:
                    cell.fill = self._fill(status)
        ws.column_dimensions['A'].width = 28
        for col in 'BCD':
            ws.column_dimensions[col].width = 14

    def _create_checks_sheet(self, workbook: openpyxl.Workbook, rows: Sequence[Any]) -> None:
        ws = workbook.create_sheet("Checks")
        headers = DIAGNOSTIC_COLUMNS + ['hard']
        for col, header in enumerate(headers, start=1):
            cell = ws.cell(row=1, column=col, value=header)
            cell.font = Font(bold=True, color='FFFFFF')
            cell.fill = self._fill('HEADER')
            cell.border = self.THIN
        for r, row in enumerate(rows, start=2):
            record = row.as_record()
            values = [record[key] for key in DIAGNOSTIC_COLUMNS] + [row.hard]
            for col, value in enumerate(values, start=1):
                if isinstance(value, float) and not math.isfinite(value):
                    value = str(value)
                cell = ws.cell(row=r, column=col, value=value)
                cell.border = self.THIN
            status = 'INFO' if not row.hard else ('PASS' if row.passed else 'FAIL')
            ws.cell(row=r, column=6).fill = self._fill(status)
        ws.column_dimensions['A'].width = 26
        ws.column_dimensions['B'].width = 60
        for col in 'CDE':
            ws.column_dimensions[col].width = 22


def generate_diagnostics_workbook(rows: Sequence[Any], output_path) -> Path:
    """
    Convenience function to generate the diagnostics workbook.

    Args:
        rows: DiagnosticRow objects
        output_path: Destination .xlsx path
    """
    return ReportGenerator().generate_diagnostics_workbook(rows, output_path)
