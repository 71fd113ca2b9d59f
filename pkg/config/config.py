import os
from pathlib import Path
from typing import Any

import dotenv

from config.default_config import DEFAULT_CONFIG

# 加载 .env 中的环境变量，已存在的环境变量优先
dotenv.load_dotenv()

# 内置场景配置目录
BUILTIN_SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"


def _get_env(key: str) -> Any:
    """从环境变量或默认配置中获取指定键的值。

    该函数首先尝试从环境变量中获取指定键的值，如果环境变量中不存在该键，
    则从默认配置字典 DEFAULT_CONFIG 中获取对应的值。

    Args:
        key (str): 要查找的配置键名

    Returns:
        Any: 找到的配置值，如果在环境变量和默认配置中都找不到该键，返回 None

    """
    return os.getenv(key, DEFAULT_CONFIG.get(key))


def _get_bool_env(key: str) -> bool:
    """从环境变量中获取指定键的布尔值，字符串"true"（不区分大小写）为 True。"""
    value = _get_env(key)
    return str(value).lower() == "true" if value is not None else False


def _get_int_env(key: str) -> int:
    """从环境变量中获取指定键的整数值"""
    return int(_get_env(key))


class Config:
    def __init__(self) -> None:
        # 场景配置目录：优先使用环境变量，否则使用内置目录
        config_dir = _get_env("HERCULES_CONFIG_DIR")
        self.CONFIG_DIR = Path(config_dir) if config_dir else BUILTIN_SCENARIO_DIR

        # 结果输出目录
        self.OUT_DIR = Path(_get_env("HERCULES_OUT_DIR"))

        # 日志配置
        self.LOG_LEVEL = str(_get_env("HERCULES_LOG_LEVEL")).upper()
        self.LOG_DIR = Path(_get_env("HERCULES_LOG_DIR"))
        self.LOG_CONSOLE = _get_bool_env("HERCULES_LOG_CONSOLE")

        # 实验默认参数
        self.DEFAULT_SEED = _get_int_env("HERCULES_DEFAULT_SEED")
        self.JOBS = _get_int_env("HERCULES_JOBS")
