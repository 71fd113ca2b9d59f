from collections.abc import Sequence

from .entities.search_entity import Evaluation


def is_unimodal(values: Sequence[float], rel_tol: float = 0.0) -> bool:
    """序列先不降后不升，允许相对最大值 rel_tol 以内的抖动"""
    if len(values) <= 2:  # noqa: PLR2004
        return True
    peak = max(range(len(values)), key=lambda i: values[i])
    tol = rel_tol * max(abs(v) for v in values)
    rising = all(values[i + 1] >= values[i] - tol for i in range(peak))
    falling = all(values[i + 1] <= values[i] + tol for i in range(peak, len(values) - 1))
    return rising and falling


def _qps(evaluation: Evaluation) -> float:
    return evaluation.qps if evaluation.valid else 0.0


def axis_slices(
    values: dict[tuple[int, int, int], Evaluation],
    point: tuple[int, int, int],
) -> dict[str, list[float]]:
    """经过 point 的 m 轴与 d 轴切片（固定 o）"""
    o, m, di = point
    along_m = sorted((k[1], _qps(v)) for k, v in values.items() if k[0] == o and k[2] == di)
    along_d = sorted((k[2], _qps(v)) for k, v in values.items() if k[0] == o and k[1] == m)
    return {"m": [q for _, q in along_m], "d": [q for _, q in along_d]}


def surface_is_unimodal(values: dict[tuple[int, int, int], Evaluation], rel_tol: float = 0.0) -> bool:
    """每个 o 切片的所有行与列都单峰，且各 o 的峰值序列单峰"""
    for o in sorted({k[0] for k in values}):
        keys = [k for k in values if k[0] == o]
        for m in sorted({k[1] for k in keys}):
            row = [_qps(values[k]) for k in sorted(k for k in keys if k[1] == m)]
            if not is_unimodal(row, rel_tol):
                return False
        for di in sorted({k[2] for k in keys}):
            column = [_qps(values[k]) for k in sorted((k for k in keys if k[2] == di), key=lambda k: k[1])]
            if not is_unimodal(column, rel_tol):
                return False
    peaks = [
        max(_qps(v) for k, v in values.items() if k[0] == o)
        for o in sorted({k[0] for k in values})
    ]
    return is_unimodal(peaks, rel_tol)
