import functools
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
import dotenv
from injector import Injector

from config import Config
from pkg.response import ExitCode, Response, success_json
from src.exception import CustomException
from src.extension.logging_extension import init_logging
from src.schemas.experiment_schema import ExperimentConfig
from src.service.config_service import ConfigService
from src.service.evolve_service import EvolveService
from src.service.profile_service import ProfileService
from src.service.serve_service import ServeService
from src.service.trace_service import TraceService

from .module import create_injector

logger = logging.getLogger(__name__)

# 加载环境变量
dotenv.load_dotenv()


def _split(value: str | None) -> list[str] | None:
    """逗号分隔的命令行列表参数"""
    if value is None:
        return None
    return [item.strip() for item in value.split(",") if item.strip()]


def _emit(response: Response) -> None:
    """输出命令结果并以对应的退出码结束"""
    click.echo(response.to_yaml(), nl=False)
    ctx = click.get_current_context()
    ctx.exit(response.exit_status)


def command_handler(func: Callable[..., dict[str, Any]]) -> Callable[..., None]:
    """统一处理命令的初始化、异常与输出"""

    @functools.wraps(func)
    def wrapper(**kwargs: Any) -> None:
        injector = create_injector()
        init_logging(injector.get(Config))
        try:
            response = success_json(func(injector, **kwargs))
        except CustomException as e:
            logger.warning("命令执行失败: %s", e.message)
            response = Response(code=e.code, message=e.message or "", data=e.data or {})
        except Exception as e:
            logger.exception("命令执行出现未预期的错误")
            response = Response(code=ExitCode.INTERNAL_ERROR, message=str(e))
        _emit(response)

    return wrapper


def common_options(func: Callable) -> Callable:
    """各命令共享的参数"""
    options = [
        click.option("--config", "config", default=None, help="场景配置文件路径或场景名"),
        click.option("--seed", type=int, default=None, help="随机种子，覆盖配置文件"),
        click.option("--jobs", type=int, default=None, help="并行子任务数量上限"),
        click.option("--out-dir", "out_dir", type=click.Path(path_type=Path), default=None, help="结果输出目录"),
        click.option("--models", default=None, help="逗号分隔的模型名"),
        click.option("--servers", default=None, help="逗号分隔的服务器类型名"),
        click.option("--policies", default=None, help="逗号分隔的供给策略"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _prepare(injector: Injector, kwargs: dict[str, Any]) -> tuple[ExperimentConfig, Path]:
    """读取场景配置并确定输出目录，命令行参数优先"""
    conf = injector.get(Config)
    overrides = {
        "seed": kwargs.get("seed"),
        "jobs": kwargs.get("jobs"),
        "models": _split(kwargs.get("models")),
        "servers": _split(kwargs.get("servers")),
        "policies": _split(kwargs.get("policies")),
        "evaluator": kwargs.get("evaluator"),
    }
    experiment = injector.get(ConfigService).load(kwargs.get("config"), overrides)
    out_dir = kwargs.get("out_dir") or conf.OUT_DIR / experiment.scenario
    return experiment, Path(out_dir)


@click.group()
def cli() -> None:
    """推荐模型推理集群的调度搜索与供给实验工具"""


@cli.command()
@common_options
@click.option("--evaluator", type=click.Choice(["analytic", "simulate"]), default=None, help="评估方式")
@command_handler
def profile(injector: Injector, **kwargs: Any) -> dict[str, Any]:
    """离线画像：为每个 (模型, 服务器) 搜索最佳调度配置，生成效率表"""
    experiment, out_dir = _prepare(injector, kwargs)
    return injector.get(ProfileService).profile(experiment, out_dir)


@cli.command()
@common_options
@command_handler
def serve(injector: Injector, **kwargs: Any) -> dict[str, Any]:
    """在线供给：按策略运行集群仿真并输出时间线"""
    experiment, out_dir = _prepare(injector, kwargs)
    return injector.get(ServeService).serve(experiment, out_dir)


@cli.command()
@common_options
@command_handler
def evolve(injector: Injector, **kwargs: Any) -> dict[str, Any]:
    """模型演进实验：逐日迁移负载并比较不同集群的容量与功耗"""
    experiment, out_dir = _prepare(injector, kwargs)
    return injector.get(EvolveService).evolve(experiment, out_dir)


@cli.command("trace-gen")
@common_options
@command_handler
def trace_gen(injector: Injector, **kwargs: Any) -> dict[str, Any]:
    """导出场景的负载轨迹文件"""
    experiment, out_dir = _prepare(injector, kwargs)
    config_service = injector.get(ConfigService)
    catalog = config_service.catalog(experiment)
    table = None
    if config_service.table_path(experiment, out_dir).is_file():
        table = config_service.load_table(experiment, out_dir)
    availability = config_service.availability(experiment, catalog)
    return injector.get(TraceService).generate(experiment, table, availability, out_dir)


@cli.command("validate-config")
@common_options
@command_handler
def validate_config(injector: Injector, **kwargs: Any) -> dict[str, Any]:
    """校验场景配置及其引用的模型与服务器"""
    experiment, _ = _prepare(injector, kwargs)
    return injector.get(ConfigService).summarize(experiment)


if __name__ == "__main__":
    cli()
