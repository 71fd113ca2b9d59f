from enum import Enum

EXIT_STATUS_SUCCESS = 0
EXIT_STATUS_FAIL = 1
EXIT_STATUS_VALIDATE_ERROR = 2
EXIT_STATUS_INFEASIBLE = 3
EXIT_STATUS_NOT_FOUND = 4
EXIT_STATUS_INTERNAL_ERROR = 5


class ExitCode(str, Enum):
    # 成功状态
    SUCCESS = "success"
    # 失败状态
    FAIL = "fail"
    # 资源未找到状态（例如缺少效率表文件）
    NOT_FOUND = "not_found"
    # 配置/目录/轨迹校验错误状态
    VALIDATE_ERROR = "validate_error"
    # 约束不可满足状态
    INFEASIBLE = "infeasible"
    # 内部错误状态
    INTERNAL_ERROR = "internal_error"

    @property
    def status(self) -> int:
        """获取该状态对应的进程退出码"""
        return _EXIT_STATUS_MAP[self]


_EXIT_STATUS_MAP = {
    ExitCode.SUCCESS: EXIT_STATUS_SUCCESS,
    ExitCode.FAIL: EXIT_STATUS_FAIL,
    ExitCode.NOT_FOUND: EXIT_STATUS_NOT_FOUND,
    ExitCode.VALIDATE_ERROR: EXIT_STATUS_VALIDATE_ERROR,
    ExitCode.INFEASIBLE: EXIT_STATUS_INFEASIBLE,
    ExitCode.INTERNAL_ERROR: EXIT_STATUS_INTERNAL_ERROR,
}
