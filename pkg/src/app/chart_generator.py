from pathlib import Path
from typing import Dict, List, Optional, Tuple

from reportlab.graphics import renderSVG
from reportlab.graphics.charts.legends import Legend
from reportlab.graphics.charts.lineplots import LinePlot
from reportlab.graphics.shapes import Drawing, String
from reportlab.graphics.widgets.markers import makeMarker
from reportlab.lib import colors

SERIES_COLORS = [
    colors.darkblue, colors.darkorange, colors.darkgreen, colors.firebrick,
    colors.purple, colors.saddlebrown, colors.deeppink, colors.gray,
]


class ChartGenerator:
    """Line charts of report series: one line per series, x = resources (or steps)"""

    def __init__(self, width: int = 480, height: int = 320):
        self.width = width
        self.height = height

    def _drawing(self, series: Dict[str, List[Tuple[float, float]]], title: str,
                 x_label: str, y_label: str) -> Drawing:
        drawing = Drawing(self.width, self.height)
        drawing.add(String(self.width / 2, self.height - 18, title, fontName="Helvetica-Bold",
                           fontSize=12, textAnchor="middle"))

        names = sorted(series)
        plot = LinePlot()
        plot.x = 55
        plot.y = 45
        plot.width = self.width - 180
        plot.height = self.height - 90
        plot.data = [sorted(series[name]) for name in names] or [[(0, 0)]]
        plot.joinedLines = 1
        for i, _ in enumerate(names):
            color = SERIES_COLORS[i % len(SERIES_COLORS)]
            plot.lines[i].strokeColor = color
            plot.lines[i].strokeWidth = 1.5
            plot.lines[i].symbol = makeMarker("FilledCircle", size=3, fillColor=color, strokeColor=color)
        xs = sorted({x for points in plot.data for x, _ in points})
        if xs and all(float(x).is_integer() for x in xs):
            plot.xValueAxis.valueSteps = xs
        plot.xValueAxis.labels.fontSize = 8
        plot.yValueAxis.labels.fontSize = 8
        drawing.add(plot)

        drawing.add(String(plot.x + plot.width / 2, 12, x_label, fontSize=9, textAnchor="middle"))
        drawing.add(String(plot.x, plot.y + plot.height + 8, y_label, fontSize=9))

        if names:
            legend = Legend()
            legend.x = plot.x + plot.width + 15
            legend.y = plot.y + plot.height
            legend.fontSize = 8
            legend.alignment = "right"
            legend.colorNamePairs = [(SERIES_COLORS[i % len(SERIES_COLORS)], name) for i, name in enumerate(names)]
            drawing.add(legend)
        return drawing

    def generate_svg(self, series: Dict[str, List[Tuple[float, float]]], output_path,
                     title: str = "", x_label: str = "resources", y_label: str = "mean final decision",
                     subtitle: Optional[str] = None) -> str:
        """Write an SVG line chart and return its path"""
        drawing = self._drawing(series, title, x_label, y_label if not subtitle else f"{y_label} ({subtitle})")
        output_path = Path(output_path)
        renderSVG.drawToFile(drawing, str(output_path))
        return str(output_path)
