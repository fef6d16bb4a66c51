def format_advice(result) -> str:
    if result.terminal:
        return "no actions available"
    lines = [f"Advised action: {result.advised}", f"Current value: {result.current:.6g}"]
    if result.optimal_value is not None:
        lines.append(f"Optimal expected value: {result.optimal_value:.6g}")
    lines.append(f"Actions ranked by {result.value_kind}:")
    width = max(len(label) for label, _ in result.ranked)
    for label, value in result.ranked:
        marker = "*" if label == result.advised else " "
        lines.append(f" {marker} {label.ljust(width)}  {value:.6g}")
    return "\n".join(lines)


def format_checks(report) -> str:
    lines = []
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        lines.append(f"[{status}] {check.check} / {check.domain}: {check.detail}")
    return "\n".join(lines)
