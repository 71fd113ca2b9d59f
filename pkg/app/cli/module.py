from injector import Binder, Injector, Module, singleton

from config import Config
from src.core.catalog import CatalogManager


class ExtensionModule(Module):
    def configure(self, binder: Binder) -> None:
        """配置模块，绑定全局配置与目录管理器到注入器

        参数:
            binder (Binder): 依赖注入绑定器，用于注册服务

        功能:
            1. 将Config绑定为单例，同一次命令中的服务共享同一份环境配置
            2. 将CatalogManager绑定为单例，内置目录只加载一次
        """
        binder.bind(Config, to=Config, scope=singleton)
        binder.bind(CatalogManager, to=CatalogManager, scope=singleton)


def create_injector() -> Injector:
    """每次命令调用创建新的注入器，环境变量在调用时读取"""
    return Injector([ExtensionModule])
