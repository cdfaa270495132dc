"""Verdict collection and reporting for experiment runs."""
import time
import json
import math
from dataclasses import dataclass, asdict, field
from typing import Any, List, Dict, Optional

from rich.console import Console
from rich.table import Table


@dataclass
class CheckResult:
    """One measured-versus-expected comparison."""
    name: str
    measured: float
    expected: float
    tolerance: float
    relative: bool = True
    passed: bool = False
    note: str = ""
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def error(self) -> float:
        difference = abs(self.measured - self.expected)
        if self.relative and self.expected != 0:
            return difference / abs(self.expected)
        return difference


class VerdictReport:
    """Aggregates checks and values across the runs of one invocation."""

    def __init__(self, title: str = "fringe-lab", config_hash: str = ""):
        self.start_time = time.time()
        self.title = title
        self.config_hash = config_hash
        self.checks: Dict[str, CheckResult] = {}
        self.values: Dict[str, Any] = {}

    def record_check(
        self,
        name: str,
        measured: float,
        expected: float,
        tolerance: float,
        relative: bool = True,
        note: str = "",
        **details,
    ) -> CheckResult:
        """Records a tolerance check; a non-finite measurement always fails."""
        check = CheckResult(name, float(measured), float(expected), tolerance, relative, note=note, details=details)
        check.passed = math.isfinite(check.measured) and check.error <= tolerance
        self.checks[name] = check
        return check

    def record_flag(self, name: str, passed: bool, note: str = "", **details) -> CheckResult:
        """Records a boolean check (measured 1/0 against expected 1)."""
        check = CheckResult(name, float(bool(passed)), 1.0, 0.0, False, bool(passed), note, details)
        self.checks[name] = check
        return check

    def record_value(self, name: str, value: Any):
        self.values[name] = value

    @property
    def failed(self) -> List[str]:
        return [name for name, check in self.checks.items() if not check.passed]

    @property
    def passed(self) -> bool:
        return not self.failed

    def generate_report(self) -> dict:
        """Generates the verdict block."""
        duration = time.time() - self.start_time
        passed = sum(1 for c in self.checks.values() if c.passed)

        return {
            'summary': {
                'title': self.title,
                'config_hash': self.config_hash,
                'duration_seconds': round(duration, 2),
                'checks_total': len(self.checks),
                'checks_passed': passed,
                'verdict': 'pass' if self.passed else 'fail',
            },
            'checks': [dict(asdict(c), error=c.error) for c in self.checks.values()],
            'values': self.values,
        }

    def save_report(self, filename: str):
        """Saves the report to a JSON file."""
        report = self.generate_report()
        # wall time is the only nondeterministic field
        with open(filename, 'w') as f:
            json.dump(report, f, indent=2, sort_keys=True, default=str)
            f.write("\n")

    def print_summary(self, console: Optional[Console] = None):
        """Prints a human-readable summary to the console."""
        console = console or Console()
        report = self.generate_report()

        table = Table(title=f"{self.title} summary")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")

        for key, value in report['summary'].items():
            table.add_row(key.replace('_', ' ').title(), str(value))

        console.print(table)

        if self.checks:
            check_table = Table(title="Checks")
            check_table.add_column("Check", style="cyan")
            check_table.add_column("Measured", style="yellow")
            check_table.add_column("Expected")
            check_table.add_column("Error")
            check_table.add_column("Tolerance", style="dim")
            check_table.add_column("Result")

            for check in self.checks.values():
                result = "[green]pass[/green]" if check.passed else "[red]fail[/red]"
                check_table.add_row(check.name, f"{check.measured:.6g}", f"{check.expected:.6g}",
                                    f"{check.error:.3g}", f"{check.tolerance:.3g}", result)

            console.print(check_table)

        if self.values:
            value_table = Table(title="Values")
            value_table.add_column("Name", style="cyan")
            value_table.add_column("Value", style="yellow")
            for key, value in self.values.items():
                value_table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
            console.print(value_table)
