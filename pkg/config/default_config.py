DEFAULT_CONFIG = {
    # 场景配置目录，为空时使用内置的 config/scenarios
    "HERCULES_CONFIG_DIR": "",
    # 结果输出目录
    "HERCULES_OUT_DIR": "storage/results",
    # 日志配置
    "HERCULES_LOG_LEVEL": "INFO",
    "HERCULES_LOG_DIR": "storage/logs",
    "HERCULES_LOG_CONSOLE": "False",
    # 默认随机种子
    "HERCULES_DEFAULT_SEED": 42,
    # 并行子任务数量上限
    "HERCULES_JOBS": 1,
}
