import csv
import io
import logging
import math
from pathlib import Path

import numpy as np

from src.exception import ValidateErrorException

from .entities.trace_entity import LoadTrace

logger = logging.getLogger(__name__)

DAY_S = 86_400.0


def gen_diurnal_trace(
    peak_qps: float,
    days: int,
    trough_ratio: float,
    noise: float = 0.0,
    interval_s: float = 1800.0,
    seed: int = 0,
    workload: str = "",
    peak_time_s: float = 0.0,
) -> LoadTrace:
    """生成24小时周期的正弦日周期负载

    无噪声时最大值为 peak_qps、最小值为 trough_ratio * peak_qps，
    噪声为乘性均匀噪声，幅度不超过 noise
    """
    if not 0 < trough_ratio < 1:
        error_msg = "trough_ratio必须位于(0, 1)区间"
        raise ValidateErrorException(error_msg, {"trough_ratio": [error_msg]})
    if noise < 0 or noise >= 1:
        error_msg = "noise必须位于[0, 1)区间"
        raise ValidateErrorException(error_msg, {"noise": [error_msg]})
    count = int(round(days * DAY_S / interval_s))
    if count <= 0:
        return LoadTrace(workload=workload, interval_s=interval_s, points=[])

    times = np.arange(count) * interval_s
    middle = peak_qps * (1 + trough_ratio) / 2
    amplitude = peak_qps * (1 - trough_ratio) / 2
    base = middle + amplitude * np.cos(2 * math.pi * (times - peak_time_s) / DAY_S)
    if noise > 0:
        rng = np.random.default_rng(seed)
        base = base * (1 + rng.uniform(-noise, noise, size=count))
    base = np.maximum(base, 0.0)
    return LoadTrace(
        workload=workload,
        interval_s=interval_s,
        points=[(float(t), float(q)) for t, q in zip(times, base, strict=True)],
    )


def ingest_trace(path: Path | str, workload: str = "", interval_s: float | None = None) -> LoadTrace:
    """读取两列逗号分隔的轨迹文件 (time_s, qps)，表头可选"""
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        text = f.read()
    return parse_trace(text, workload=workload or path.stem, interval_s=interval_s, source=path.name)


def parse_trace(
    text: str,
    workload: str = "",
    interval_s: float | None = None,
    source: str = "<trace>",
) -> LoadTrace:
    """解析轨迹文本，出错时异常信息包含行号"""
    points: list[tuple[float, float]] = []
    for row_number, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:  # noqa: PLR2004
            error_msg = f"{source}第{row_number}行应为两列，实际为{len(row)}列"
            raise ValidateErrorException(error_msg, {"row": row_number})
        try:
            t, qps = float(row[0]), float(row[1])
        except ValueError as e:
            # 第一行允许为表头
            if row_number == 1 and not points:
                continue
            error_msg = f"{source}第{row_number}行不是数字"
            raise ValidateErrorException(error_msg, {"row": row_number}) from e
        if qps < 0 or not math.isfinite(qps) or not math.isfinite(t):
            error_msg = f"{source}第{row_number}行QPS为负数或非有限值"
            raise ValidateErrorException(error_msg, {"row": row_number})
        if points and t < points[-1][0]:
            error_msg = f"{source}第{row_number}行时刻未按升序排列"
            raise ValidateErrorException(error_msg, {"row": row_number})
        points.append((t, qps))
    if not points:
        error_msg = f"{source}轨迹为空"
        raise ValidateErrorException(error_msg, {"row": 0})
    if interval_s is None:
        interval_s = points[1][0] - points[0][0] if len(points) > 1 else 1800.0
        interval_s = interval_s if interval_s > 0 else 1800.0
    return LoadTrace(workload=workload, interval_s=interval_s, points=points)


def format_trace(trace: LoadTrace) -> str:
    """按文件格式输出轨迹文本"""
    lines = ["time_s,qps"]
    lines.extend(f"{_fmt(t)},{_fmt(q)}" for t, q in trace.points)
    return "\n".join(lines) + "\n"


def export_trace(trace: LoadTrace, path: Path | str) -> Path:
    """导出轨迹文件，格式与 ingest_trace 一致"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_trace(trace), encoding="utf-8")
    return path


def _fmt(value: float) -> str:
    # repr保证导出后再读入得到相同的浮点数
    return repr(float(value))


def interval_loads(trace: LoadTrace, interval_s: float) -> list[float]:
    """按区间分桶，每个区间取峰值负载"""
    if not trace.points:
        return []
    start = trace.points[0][0]
    buckets: dict[int, float] = {}
    for t, qps in trace.points:
        index = int((t - start) // interval_s)
        buckets[index] = max(buckets.get(index, 0.0), qps)
    last = max(buckets)
    return [buckets.get(index, 0.0) for index in range(last + 1)]


def estimate_overprovision_rate(
    trace: LoadTrace,
    interval_s: float,
    window_s: float | None = None,
) -> float:
    """估计超额供给率 R（百分比）

    R 为相邻区间负载增长率的最大值，下限为0；window_s 给出时只使用末尾窗口内的点
    """
    points = trace.points
    if window_s is not None and points:
        end = points[-1][0]
        points = [(t, q) for t, q in points if t >= end - window_s]
    loads = interval_loads(LoadTrace(workload=trace.workload, interval_s=trace.interval_s, points=points), interval_s)
    if len(loads) < 2:  # noqa: PLR2004
        error_msg = "轨迹至少需要覆盖两个区间才能估计超额供给率"
        raise ValidateErrorException(error_msg, {"trace": [error_msg]})
    rate = 0.0
    for prev, cur in zip(loads, loads[1:], strict=False):
        if prev > 0:
            rate = max(rate, (cur - prev) / prev)
    logger.debug("轨迹%s的超额供给率为%.4f%%", trace.workload, rate * 100)
    return rate * 100


def scale_trace(trace: LoadTrace, factor: float, workload: str | None = None) -> LoadTrace:
    """按比例缩放轨迹负载"""
    return LoadTrace(
        workload=trace.workload if workload is None else workload,
        interval_s=trace.interval_s,
        points=[(t, q * factor) for t, q in trace.points],
    )


def mix_traces(traces: list[LoadTrace], workload: str = "") -> LoadTrace:
    """将时间对齐的多条轨迹逐点相加"""
    if not traces:
        return LoadTrace(workload=workload, points=[])
    times = traces[0].times
    for trace in traces[1:]:
        if trace.times != times:
            error_msg = "待合并的轨迹时间点不一致"
            raise ValidateErrorException(error_msg, {"traces": [error_msg]})
    return LoadTrace(
        workload=workload,
        interval_s=traces[0].interval_s,
        points=[(t, sum(tr.points[i][1] for tr in traces)) for i, t in enumerate(times)],
    )
