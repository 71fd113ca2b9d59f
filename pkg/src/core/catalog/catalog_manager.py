import logging
from pathlib import Path
from typing import Any
from typing_extensions import Self

import yaml
from injector import inject, singleton
from pydantic import BaseModel, Field, ValidationError, model_validator

from src.exception import NotFoundException, ValidateErrorException

from .entities.model_entity import ModelSpec
from .entities.server_entity import AccelSpec, CpuSpec, MemorySpec, ServerSpec

logger = logging.getLogger(__name__)

CATALOG_ROOT = Path(__file__).resolve().parent


class _LineLoader(yaml.SafeLoader):
    """记录每个映射节点起始行号的YAML加载器"""


def _construct_mapping(loader: _LineLoader, node: yaml.MappingNode) -> dict:
    mapping = loader.construct_mapping(node, deep=True)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def strip_lines(data: Any) -> Any:
    """去掉加载时附加的行号信息"""
    if isinstance(data, dict):
        return {k: strip_lines(v) for k, v in data.items() if k != "__line__"}
    if isinstance(data, list):
        return [strip_lines(item) for item in data]
    return data


def load_yaml_with_lines(path: Path) -> Any:
    """读取YAML文件，解析失败时抛出带行号的校验异常"""
    try:
        with path.open(encoding="utf-8") as f:
            return yaml.load(f, Loader=_LineLoader)  # noqa: S506
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        error_msg = f"{path.name}第{line}行解析失败: {getattr(e, 'problem', e)}"
        raise ValidateErrorException(error_msg, {"file": str(path), "line": line}) from e


def build_spec(spec_cls: type[BaseModel], data: dict, source: str) -> BaseModel:
    """使用pydantic构建规格实体，校验失败时异常信息包含字段名与行号"""
    line = data.get("__line__", 0) if isinstance(data, dict) else 0
    try:
        return spec_cls(**strip_lines(data))
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(loc) for loc in first["loc"]) or "<root>"
        error_msg = f"{source}第{line}行字段{field}校验失败: {first['msg']}"
        raise ValidateErrorException(
            error_msg,
            {"file": source, "line": line, "field": field},
        ) from e
    except TypeError as e:
        error_msg = f"{source}第{line}行格式错误: {e}"
        raise ValidateErrorException(error_msg, {"file": source, "line": line}) from e


@inject
@singleton
class CatalogManager(BaseModel):
    """模型与服务器目录管理器"""

    model_map: dict[str, ModelSpec] = Field(default_factory=dict)  # 模型名字 -> 模型规格
    server_map: dict[str, ServerSpec] = Field(default_factory=dict)  # 服务器名字 -> 服务器规格
    cpu_map: dict[str, CpuSpec] = Field(default_factory=dict)
    memory_map: dict[str, MemorySpec] = Field(default_factory=dict)
    accel_map: dict[str, AccelSpec] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_catalog_manager(self: Self) -> Self:
        """读取内置目录完成管理器初始化"""
        if not self.model_map and not self.server_map:
            self._load_builtin()
        return self

    def _load_builtin(self) -> None:
        # 1.读取服务器组件
        components = load_yaml_with_lines(CATALOG_ROOT / "servers" / "components.yaml")
        self._register_components(components, "components.yaml")

        # 2.按positions.yaml顺序读取模型
        for name in self._positions(CATALOG_ROOT / "models"):
            path = CATALOG_ROOT / "models" / f"{name}.yaml"
            model = build_spec(ModelSpec, load_yaml_with_lines(path), path.name)
            self.model_map[model.name] = model

        # 3.按positions.yaml顺序读取服务器
        for name in self._positions(CATALOG_ROOT / "servers"):
            path = CATALOG_ROOT / "servers" / f"{name}.yaml"
            server = self._build_server(load_yaml_with_lines(path), path.name)
            self.server_map[server.name] = server

    @classmethod
    def _positions(cls, folder: Path) -> list[str]:
        with (folder / "positions.yaml").open(encoding="utf-8") as f:
            positions = yaml.safe_load(f) or []
        if not isinstance(positions, list):
            error_msg = f"{folder.name}/positions.yaml数据格式错误"
            raise ValidateErrorException(error_msg)
        return positions

    def _register_components(self, data: dict | None, source: str) -> None:
        if not data:
            return
        for item in data.get("cpus", []) or []:
            cpu = build_spec(CpuSpec, item, source)
            self.cpu_map[cpu.name] = cpu
        for item in data.get("memories", []) or []:
            memory = build_spec(MemorySpec, item, source)
            self.memory_map[memory.name] = memory
        for item in data.get("accels", []) or []:
            accel = build_spec(AccelSpec, item, source)
            self.accel_map[accel.name] = accel

    def _resolve_component(self, value: Any, table: dict, kind: str, source: str, line: int) -> Any:
        """组件既可内联定义，也可以通过名字引用"""
        if isinstance(value, str):
            if value not in table:
                error_msg = f"{source}第{line}行引用的{kind}组件{value}不存在"
                raise ValidateErrorException(error_msg, {"file": source, "line": line, "field": kind})
            return table[value].model_dump()
        return value

    def _build_server(self, data: dict, source: str) -> ServerSpec:
        if not isinstance(data, dict):
            error_msg = f"{source}服务器定义必须是映射"
            raise ValidateErrorException(error_msg, {"file": source})
        line = data.get("__line__", 0)
        resolved = dict(data)
        resolved["cpu"] = self._resolve_component(data.get("cpu"), self.cpu_map, "cpu", source, line)
        resolved["memory"] = self._resolve_component(
            data.get("memory"), self.memory_map, "memory", source, line,
        )
        if data.get("accel") is not None:
            resolved["accel"] = self._resolve_component(
                data.get("accel"), self.accel_map, "accel", source, line,
            )
        return build_spec(ServerSpec, resolved, source)

    def load_override(self, path: Path) -> Self:
        """返回合并了用户目录文件的新管理器，同名条目覆盖内置条目

        文件格式为 {cpus, memories, accels, models, servers} 五个可选列表
        """
        merged = CatalogManager(
            model_map=dict(self.model_map),
            server_map=dict(self.server_map),
            cpu_map=dict(self.cpu_map),
            memory_map=dict(self.memory_map),
            accel_map=dict(self.accel_map),
        )
        data = load_yaml_with_lines(Path(path))
        if data is None:
            return merged
        if not isinstance(data, dict):
            error_msg = f"{Path(path).name}目录文件顶层必须是映射"
            raise ValidateErrorException(error_msg, {"file": str(path), "line": 1})
        source = Path(path).name
        merged._register_components(data, source)  # noqa: SLF001
        for item in data.get("models", []) or []:
            model = build_spec(ModelSpec, item, source)
            merged.model_map[model.name] = model
        for item in data.get("servers", []) or []:
            server = merged._build_server(item, source)  # noqa: SLF001
            merged.server_map[server.name] = server
        logger.info(
            "合并目录文件%s: %d个模型, %d个服务器",
            source,
            len(merged.model_map),
            len(merged.server_map),
        )
        return merged

    def get_model(self, name: str) -> ModelSpec:
        """根据名字获取模型规格"""
        model = self.model_map.get(name)
        if model is None:
            error_msg = f"模型{name}不存在，请核实后重试"
            raise NotFoundException(error_msg)
        return model

    def get_server(self, name: str) -> ServerSpec:
        """根据名字获取服务器规格"""
        server = self.server_map.get(name)
        if server is None:
            error_msg = f"服务器类型{name}不存在，请核实后重试"
            raise NotFoundException(error_msg)
        return server

    def get_models(self, names: list[str] | None = None) -> list[ModelSpec]:
        if not names:
            return list(self.model_map.values())
        return [self.get_model(name) for name in names]

    def get_servers(self, names: list[str] | None = None) -> list[ServerSpec]:
        if not names:
            return list(self.server_map.values())
        return [self.get_server(name) for name in names]


def load_catalogs(config_path: Path | str | None = None) -> tuple[list[ModelSpec], list[ServerSpec]]:
    """加载内置目录，如给出用户文件则合并覆盖"""
    manager = CatalogManager()
    if config_path is not None:
        manager = manager.load_override(Path(config_path))
    return manager.get_models(), manager.get_servers()


def dump_catalogs(models: list[ModelSpec], servers: list[ServerSpec]) -> str:
    """将目录序列化为YAML文本，组件全部内联"""
    return yaml.safe_dump(
        {
            "models": [m.to_yaml_dict() for m in models],
            "servers": [s.to_yaml_dict() for s in servers],
        },
        allow_unicode=True,
        sort_keys=False,
    )
