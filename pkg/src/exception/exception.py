from dataclasses import field
from typing import Any

from pkg.response import ExitCode


class CustomException(Exception):  # noqa: N818
    """自定义异常类，用于处理调度工具链中的异常情况。

    该类继承自Python内置的Exception类，提供了更丰富的异常信息处理能力，
    包括状态码、自定义错误消息和附加数据。

    主要功能：
    - 支持自定义错误消息
    - 支持附加任意类型的数据（例如不可行性报告）
    - 内置状态码支持，命令行据此决定进程退出码

    示例用法：
        try:
            raise CustomException("操作失败", {"error": "invalid_input"})
        except CustomException as e:
            print(f"错误: {e.message}, 附加数据: {e.data}")

    构造函数参数：
        message (str, optional): 错误消息，默认为None
        data (Any, optional): 附加的错误数据，默认为None
    """

    code: ExitCode = ExitCode.FAIL
    message: str = ""
    data: Any = field(default_factory=dict)

    def __init__(self, message: str | None = None, data: Any = None) -> None:
        super().__init__(message)
        self.message = message
        self.data = data


class FailException(CustomException):
    """通用失败异常"""


class NotFoundException(CustomException):
    """资源未找到异常，例如模型/服务器不存在或效率表文件缺失"""

    code: ExitCode = ExitCode.NOT_FOUND


class ValidateErrorException(CustomException):
    """校验异常

    用于目录文件、实验配置、轨迹文件解析失败的情况，错误消息需指明字段与行号
    """

    code: ExitCode = ExitCode.VALIDATE_ERROR


class InfeasibleException(CustomException):
    """约束不可满足异常

    划分、线性规划、取整修复或基线分配无法满足约束时抛出，
    data 中携带结构化的不可行性报告
    """

    code: ExitCode = ExitCode.INFEASIBLE


class InternalErrorException(CustomException):
    """内部错误异常"""

    code: ExitCode = ExitCode.INTERNAL_ERROR
