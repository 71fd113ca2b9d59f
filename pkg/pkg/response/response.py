from dataclasses import dataclass, field
from typing import Any

import yaml

from pkg.response.exit_code import ExitCode


@dataclass
class Response:
    """命令结果封装类

    用于统一命令行输出格式，包含状态码、消息和数据

    Attributes:
        code (ExitCode): 状态码，默认为SUCCESS
        message (str): 结果消息，默认为空字符串
        data (Any): 结果数据，默认为空字典

    """

    code: ExitCode = ExitCode.SUCCESS
    message: str = ""
    data: Any = field(default_factory=dict)

    @property
    def exit_status(self) -> int:
        """结果对应的进程退出码"""
        return self.code.status

    def to_yaml(self) -> str:
        """将结果渲染为YAML文本，键顺序固定以保证输出可复现"""
        return yaml.safe_dump(
            {"code": self.code.value, "message": self.message, "data": self.data},
            allow_unicode=True,
            sort_keys=False,
        )


def success_json(data: Any | None = None) -> Response:
    """返回一个表示成功的命令结果。"""
    return Response(code=ExitCode.SUCCESS, message="", data=data if data else {})
