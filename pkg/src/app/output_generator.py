import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import pandas as pd

from src.app.chart_generator import ChartGenerator
from src.config import settings
from src.config.exceptions import ConfigError

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("csv", "svg")


class OutputGenerator:
    """Write report tables as CSV, SVG line charts and a metadata sidecar.

    Files share a basename; the same report always produces the same bytes.
    """

    def __init__(self, output_dir=None):
        self.output_dir = Path(output_dir or settings.OUTPUT_DIR)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.charts = ChartGenerator()

    def generate_csv(self, frame: pd.DataFrame, basename: str) -> str:
        output_path = self.output_dir / f"{basename}.csv"
        frame.to_csv(output_path, index=False, float_format="%.12g", lineterminator="\n")
        return str(output_path)

    def generate_metadata(self, metadata: Dict, basename: str, failures: Optional[List[Dict]] = None) -> str:
        output_path = self.output_dir / f"{basename}.meta.json"
        payload = {"metadata": metadata, "failures": failures or []}
        with open(output_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(payload, sort_keys=True, indent=2, default=str))
            f.write("\n")
        return str(output_path)


def emit_report(report, basename: str, formats: Iterable[str] = REPORT_FORMATS, output_dir=None) -> List[str]:
    """Write a report's CSV, SVG chart and metadata sidecar

    Args:
        report: any report exposing to_frame(), metadata and optionally series()/failures
        basename: file stem shared by every output
        formats: subset of ("csv", "svg"); metadata is always written
        output_dir: directory, created when missing
    Returns:
        List[str]: written paths
    """
    formats = list(formats)
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise ConfigError(f"unknown report formats {sorted(unknown)}, expected a subset of {REPORT_FORMATS}")
    generator = OutputGenerator(output_dir)
    written = []
    if "csv" in formats:
        written.append(generator.generate_csv(report.to_frame(), basename))
    if "svg" in formats and hasattr(report, "series"):
        x_label, y_label = getattr(report, "axis_labels", ("resources", "mean final decision"))
        written.append(generator.charts.generate_svg(report.series(), generator.output_dir / f"{basename}.svg",
                                                     basename, x_label, y_label))
    written.append(generator.generate_metadata(report.metadata, basename, getattr(report, "failures", None)))
    logger.info(f"Wrote {', '.join(Path(p).name for p in written)} to {generator.output_dir}")
    return written
