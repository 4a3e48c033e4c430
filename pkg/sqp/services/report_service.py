import logging
import os
from typing import Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined, select_autoescape

from sqp.models.reports import ComparisonReport, MemoryReport, MultiplyCount, LayerCostTable

log = logging.getLogger(__name__)

DEFAULT_TEMPLATES_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), "templates")


def mean_std(mean: float, std: Optional[float], digits: int = 3) -> str:
    if std is None:
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def thousands(value: int) -> str:
    return f"{value:,}"


class ReportService:
    """Human readable reports rendered from the text templates."""

    def __init__(self, templates_path: str = DEFAULT_TEMPLATES_PATH):
        self._env = Environment(
            loader=FileSystemLoader(templates_path),
            autoescape=select_autoescape(),
            undefined=StrictUndefined,
            keep_trailing_newline=True,
            trim_blocks=True,
            lstrip_blocks=True,
        )
        self._env.filters["mean_std"] = mean_std
        self._env.filters["thousands"] = thousands

    def render(self, template_name: str, **context) -> str:
        log.debug("Rendering %s", template_name)
        return self._env.get_template(template_name).render(**context)

    def memory_report(
        self,
        report: MemoryReport,
        variant: str,
        counts: Optional[LayerCostTable] = None,
        multiplies: Optional[MultiplyCount] = None,
    ) -> str:
        return self.render(
            "memory_report.txt.j2",
            report=report,
            variant=variant,
            counts=counts,
            multiplies=multiplies,
        )

    def comparison_summary(self, report: ComparisonReport) -> str:
        return self.render("comparison_summary.txt.j2", report=report)
