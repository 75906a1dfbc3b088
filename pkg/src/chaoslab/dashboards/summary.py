"""Rich tables summarising experiment checks.

:class:`SummaryDashboard` keeps one table of acceptance checks and one of
fitted rates, and prints them once after a run.
"""

from __future__ import annotations

from rich.console import Console, Group
from rich.panel import Panel
from rich.table import Table


class SummaryDashboard:
    """Collect experiment results and render them as tables."""

    def __init__(self, console: Console | None = None) -> None:
        self.console = console or Console(stderr=True)
        self.checks_table = self._create_checks_table()
        self.rates_table = self._create_rates_table()

    def add_result(self, result) -> None:
        for check in result.checks:
            self.checks_table.add_row(
                result.name,
                check.name,
                f"{check.value:.6g}",
                f"{check.threshold:.6g}",
                f"{check.margin:.3g}",
                "[green]pass[/green]" if check.passed else "[red]fail[/red]",
            )
        slope = result.summary.get("bound_slope")
        if slope is not None:
            self.rates_table.add_row(result.name, f"{slope:.12f}", str(result.summary.get("d2_slope") or "-"))

    def group(self) -> Group:
        return Group(
            Panel(self.checks_table, title="Acceptance Checks"),
            Panel(self.rates_table, title="Fitted Rates"),
        )

    def render(self) -> None:
        self.console.print(self.group())

    @staticmethod
    def _create_checks_table() -> Table:
        table = Table(title="Checks")
        table.add_column("Experiment", style="bold green")
        table.add_column("Check", style="cyan")
        table.add_column("Value", justify="right", style="magenta")
        table.add_column("Threshold", justify="right", style="yellow")
        table.add_column("Margin", justify="right")
        table.add_column("Verdict", justify="center", style="bold")
        return table

    @staticmethod
    def _create_rates_table() -> Table:
        table = Table(title="Log-log slopes")
        table.add_column("Experiment", style="bold green")
        table.add_column("Bound slope", justify="right", style="cyan")
        table.add_column("d2 slope", justify="right", style="magenta")
        return table
