import logging
from pathlib import Path

from concurrent_log_handler import ConcurrentTimedRotatingFileHandler

from config import Config

LOG_FILE_NAME = "hercules.log"


def init_logging(conf: Config) -> None:
    """初始化命令行工具的日志系统

    Args:
        conf: 全局配置实例

    """
    level = logging.getLevelName(conf.LOG_LEVEL)
    if not isinstance(level, int):
        level = logging.INFO
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # 重复初始化时不再叠加处理器
    for handler in list(root_logger.handlers):
        if getattr(handler, "_hercules_handler", False):
            root_logger.removeHandler(handler)
            handler.close()

    # 创建日志文件夹路径
    log_folder = Path(conf.LOG_DIR)
    if not log_folder.is_absolute():
        log_folder = Path.cwd() / log_folder
    log_folder.mkdir(parents=True, exist_ok=True)

    # 设置日志文件路径
    log_file = log_folder / LOG_FILE_NAME

    # 创建定时轮转的文件处理器
    # when="midnight": 每天午夜轮转日志文件
    # backupCount=30: 保留30个历史日志文件
    handler = ConcurrentTimedRotatingFileHandler(
        log_file,
        when="midnight",
        interval=1,
        backupCount=30,
        encoding="utf-8",
    )

    # 格式包含：时间戳（精确到毫秒）、文件名、函数名、行号、日志级别、消息
    formatter = logging.Formatter(
        "[%(asctime)s.%(msecs)03d] %(filename)s -> %(funcName)s "
        "line:%(lineno)d [%(levelname)s] %(message)s",
    )

    handler.setLevel(level)
    handler.setFormatter(formatter)
    handler._hercules_handler = True  # noqa: SLF001
    root_logger.addHandler(handler)

    # 开启控制台日志时，日志输出到标准错误，结果文件与标准输出不受影响
    if conf.LOG_CONSOLE:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        console_handler.setLevel(level)
        console_handler._hercules_handler = True  # noqa: SLF001
        root_logger.addHandler(console_handler)
