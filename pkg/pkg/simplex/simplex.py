from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# 数值容差
EPS = 1e-9


class LPStatus(str, Enum):
    """线性规划求解状态"""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    """线性规划求解结果

    duals_ub/duals_eq 为单纯形乘子 y = c_B B^-1，对 min c·x, A_ub·x <= b_ub 有 duals_ub <= 0
    """

    status: LPStatus
    x: np.ndarray | None = None
    objective: float | None = None
    duals_ub: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    infeasible_rows: list[tuple[str, int]] = field(default_factory=list)  # 第一阶段结束时仍无法满足的约束行
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


def _as_matrix(a: np.ndarray | None, n: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    return np.atleast_2d(np.asarray(a, dtype=float)).reshape(-1, n)


class _Tableau:
    """单纯形表，最后一列为右端项，最后一行为检验数"""

    def __init__(self, rows: np.ndarray, rhs: np.ndarray, basis: list[int]) -> None:
        m, n = rows.shape
        self.table = np.zeros((m + 1, n + 1))
        self.table[:m, :n] = rows
        self.table[:m, n] = rhs
        self.basis = basis
        self.iterations = 0

    def set_objective(self, cost: np.ndarray) -> None:
        """设置目标函数并按当前基消去检验数"""
        n = self.table.shape[1] - 1
        self.table[-1, :n] = cost
        self.table[-1, n] = 0.0
        for row, var in enumerate(self.basis):
            if abs(self.table[-1, var]) > 0:
                self.table[-1] -= self.table[-1, var] * self.table[row]

    def pivot(self, row: int, col: int) -> None:
        t = self.table
        t[row] /= t[row, col]
        for i in range(t.shape[0]):
            if i != row and t[i, col] != 0:
                t[i] -= t[i, col] * t[row]
        self.basis[row] = col
        self.iterations += 1

    def optimize(self, allowed: np.ndarray, max_iterations: int) -> LPStatus:
        """Bland规则：进基取下标最小的负检验数列，出基在最小比值平局时取基变量下标最小者"""
        t = self.table
        while self.iterations < max_iterations:
            costs = t[-1, :-1]
            entering = next((j for j in np.flatnonzero(allowed) if costs[j] < -EPS), None)
            if entering is None:
                return LPStatus.OPTIMAL
            column = t[:-1, entering]
            leaving = None
            best_ratio = np.inf
            for i in np.flatnonzero(column > EPS):
                ratio = t[i, -1] / column[i]
                if ratio < best_ratio - EPS or (
                    abs(ratio - best_ratio) <= EPS and leaving is not None and self.basis[i] < self.basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = i
            if leaving is None:
                return LPStatus.UNBOUNDED
            self.pivot(leaving, entering)
        error_msg = "单纯形迭代次数超过上限"
        raise RuntimeError(error_msg)

    def solution(self, n: int) -> np.ndarray:
        x = np.zeros(self.table.shape[1] - 1)
        for row, var in enumerate(self.basis):
            x[var] = self.table[row, -1]
        return x[:n]


def solve(
    c: np.ndarray,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    max_iterations: int = 10_000,
) -> LPResult:
    """两阶段原始单纯形法求解 min c·x, A_ub·x <= b_ub, A_eq·x = b_eq, x >= 0"""
    c = np.asarray(c, dtype=float).ravel()
    n = c.shape[0]
    a_ub = _as_matrix(a_ub, n)
    a_eq = _as_matrix(a_eq, n)
    b_ub = np.asarray(b_ub if b_ub is not None else [], dtype=float).ravel()
    b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).ravel()
    if a_ub.shape[0] != b_ub.shape[0] or a_eq.shape[0] != b_eq.shape[0]:
        error_msg = "约束矩阵与右端项维度不一致"
        raise ValueError(error_msg)

    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq
    # 列布局：[原变量 n | 松弛 m_ub | 人工 m]
    slack0, art0 = n, n + m_ub
    total = n + m_ub + m
    rows = np.zeros((m, total))
    rhs = np.zeros(m)
    signs = np.ones(m)
    basis: list[int] = []
    ident: list[int] = []  # 每行初始单位列
    artificial: list[int] = []

    for i in range(m):
        if i < m_ub:
            rows[i, :n] = a_ub[i]
            rows[i, slack0 + i] = 1.0
            rhs[i] = b_ub[i]
        else:
            rows[i, :n] = a_eq[i - m_ub]
            rhs[i] = b_eq[i - m_ub]
        if rhs[i] < 0:
            rows[i] *= -1
            rhs[i] *= -1
            signs[i] = -1.0
        if i < m_ub and signs[i] > 0:
            basis.append(slack0 + i)
            ident.append(slack0 + i)
        else:
            rows[i, art0 + i] = 1.0
            basis.append(art0 + i)
            ident.append(art0 + i)
            artificial.append(art0 + i)

    tableau = _Tableau(rows, rhs, basis)
    is_artificial = np.zeros(total, dtype=bool)
    is_artificial[artificial] = True

    # 1.第一阶段：最小化人工变量之和
    if artificial:
        cost1 = np.zeros(total)
        cost1[artificial] = 1.0
        tableau.set_objective(cost1)
        tableau.optimize(np.ones(total, dtype=bool), max_iterations)
        if -tableau.table[-1, -1] > EPS * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            # 人工变量 art0 + i 属于第 i 行约束
            blocked = [
                ("ub", var - art0) if var - art0 < m_ub else ("eq", var - art0 - m_ub)
                for i, var in enumerate(tableau.basis)
                if is_artificial[var] and tableau.table[i, -1] > EPS
            ]
            return LPResult(status=LPStatus.INFEASIBLE, infeasible_rows=blocked, iterations=tableau.iterations)
        # 把零水平的人工变量换出基
        for row, var in enumerate(list(tableau.basis)):
            if not is_artificial[var]:
                continue
            candidates = np.flatnonzero((np.abs(tableau.table[row, :-1]) > EPS) & ~is_artificial)
            if candidates.size:
                tableau.pivot(row, int(candidates[0]))

    # 2.第二阶段
    cost2 = np.zeros(total)
    cost2[:n] = c
    tableau.set_objective(cost2)
    status = tableau.optimize(~is_artificial, max_iterations)
    if status == LPStatus.UNBOUNDED:
        return LPResult(status=status, iterations=tableau.iterations)

    x = tableau.solution(n)
    reduced = tableau.table[-1, :-1]
    duals = np.array([-reduced[col] * signs[i] for i, col in enumerate(ident)])
    return LPResult(
        status=LPStatus.OPTIMAL,
        x=x,
        objective=float(c @ x),
        duals_ub=duals[:m_ub],
        duals_eq=duals[m_ub:],
        iterations=tableau.iterations,
    )


def check_optimality(
    c: np.ndarray,
    a_ub: np.ndarray | None,
    b_ub: np.ndarray | None,
    result: LPResult,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    tol: float = 1e-6,
) -> bool:
    """用原始可行、对偶可行与互补松弛条件校验最优解"""
    if not result.is_optimal:
        return False
    c = np.asarray(c, dtype=float).ravel()
    n = c.shape[0]
    a_ub = _as_matrix(a_ub, n)
    a_eq = _as_matrix(a_eq, n)
    b_ub = np.asarray(b_ub if b_ub is not None else [], dtype=float).ravel()
    b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).ravel()
    x, y_ub, y_eq = result.x, result.duals_ub, result.duals_eq
    scale = max(1.0, float(np.abs(c).max(initial=0.0)), float(np.abs(b_ub).max(initial=0.0)))
    tol = tol * scale

    # 原始可行
    if np.any(x < -tol) or np.any(a_ub @ x - b_ub > tol) or np.any(np.abs(a_eq @ x - b_eq) > tol):
        return False
    # 对偶可行：y_ub <= 0，检验数 c - A^T y >= 0
    if np.any(y_ub > tol):
        return False
    reduced = c - a_ub.T @ y_ub - a_eq.T @ y_eq
    if np.any(reduced < -tol):
        return False
    # 互补松弛
    if np.any(np.abs(y_ub * (b_ub - a_ub @ x)) > tol):
        return False
    return not np.any(np.abs(x * reduced) > tol)
