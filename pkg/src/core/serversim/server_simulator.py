import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import simpy

from src.core.catalog import ModelSpec, ServerSpec
from src.core.loadgen import QueryStream, sample_hot_hits
from src.core.partitioner import PartitionPlan
from src.core.perfmodel import (
    DEFAULT_CALIBRATION,
    Calibration,
    PipelineModel,
    PipelinePath,
    SchedConfig,
    Stage,
    StageLatency,
    Utilization,
    build_pipeline,
    power_draw,
)
from src.exception import ValidateErrorException

from .entities.sim_entity import SimReport

logger = logging.getLogger(__name__)

# 时延分解下标
QUEUE, LOAD, COMPUTE, COMM = range(4)
# 忙碌度量下标
CPU, MEMORY, ACCEL = range(3)


class _Piece:
    """子查询（或被融合批拆开的一段子查询）"""

    __slots__ = ("breakdown", "enqueued_at", "items", "query")

    def __init__(self, query: int, items: int, enqueued_at: float, breakdown: np.ndarray | None = None) -> None:
        self.query = query
        self.items = items
        self.enqueued_at = enqueued_at
        self.breakdown = np.zeros(4) if breakdown is None else breakdown.copy()

    def split(self, items: int) -> "_Piece":
        """从当前段切出 items 个样本"""
        head = _Piece(self.query, items, self.enqueued_at, self.breakdown)
        self.items -= items
        return head


class _BusyMeter:
    """按功耗窗口累计各组件的忙碌时间"""

    def __init__(self, start: float, end: float, window: float) -> None:
        count = max(1, math.ceil((end - start) / window - 1e-9))
        self.edges = np.minimum(start + window * np.arange(count + 1), end)
        self.edges[-1] = end
        self.busy = np.zeros((3, count))

    def add(self, component: int, t0: float, t1: float, weight: float) -> None:
        """在 [t0, t1) 内以每秒 weight 的速率累计忙碌量"""
        if t1 <= t0 or weight <= 0:
            return
        lo = max(t0, self.edges[0])
        hi = min(t1, self.edges[-1])
        if hi <= lo:
            return
        first = max(int(np.searchsorted(self.edges, lo, side="right")) - 1, 0)
        last = min(int(np.searchsorted(self.edges, hi, side="left")) - 1, self.busy.shape[1] - 1)
        for index in range(first, last + 1):
            overlap = min(hi, self.edges[index + 1]) - max(lo, self.edges[index])
            if overlap > 0:
                self.busy[component, index] += weight * overlap

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


@dataclass
class _FusionBuffer:
    """加速器侧查询融合缓冲"""

    pieces: list[_Piece] = field(default_factory=list)
    items: int = 0
    generation: int = 0


@dataclass
class _PathRuntime:
    path: PipelinePath
    host: list[Stage]
    accel: Stage | None
    first_queues: list[simpy.Store] = field(default_factory=list)
    links: dict[int, simpy.Store] = field(default_factory=dict)  # 第 i 个主机阶段的输入中间队列
    next_worker: int = 0
    fusion: _FusionBuffer = field(default_factory=_FusionBuffer)
    batches: simpy.Store | None = None


class ServerSimulator:
    """单台服务器的离散事件仿真

    主机路径：查询拆分为不超过 d 个样本的子查询，轮询分发到 m 个线程队列；
    S-D 流水的稀疏与稠密线程之间通过有界中间队列通信；
    加速器路径：子查询在融合缓冲中累积到 d 个样本或超时后组成一个批次，
    每个共置线程的数据加载与计算流水重叠
    """

    def __init__(
        self,
        model: ModelSpec,
        server: ServerSpec,
        cfg: SchedConfig,
        calibration: Calibration = DEFAULT_CALIBRATION,
        hot_hit_rate: float = 1.0,
        sla_ms: float | None = None,
    ) -> None:
        self.model = model
        self.server = server
        self.cfg = cfg
        self.calibration = calibration
        self.hot_hit_rate = hot_hit_rate
        self.pipeline: PipelineModel = build_pipeline(model, server, cfg, calibration, hot_hit_rate, sla_ms)

    def run(self, stream: QueryStream, duration_s: float) -> SimReport:
        if len(stream) == 0:
            error_msg = "查询流不能为空"
            raise ValidateErrorException(error_msg)
        if duration_s <= 0:
            error_msg = "仿真时长必须为正数"
            raise ValidateErrorException(error_msg)
        return _Run(self, stream, duration_s).execute()


class _Run:
    """一次仿真的全部可变状态，事件循环独占"""

    def __init__(self, sim: ServerSimulator, stream: QueryStream, duration_s: float) -> None:
        self.sim = sim
        self.calibration = sim.calibration
        self.stream = stream
        self.duration_s = duration_s
        self.env = simpy.Environment()
        self.warm_start = duration_s * self.calibration.warmup_fraction

        n = len(stream)
        self.remaining = np.zeros(n, dtype=np.int64)
        self.finish = np.full(n, np.nan)
        self.dropped = np.zeros(n, dtype=bool)
        self.breakdown = np.zeros((n, 4))
        self.meter = _BusyMeter(self.warm_start, duration_s, self.calibration.power_window_s)

        mean_pooling = float(sum(sim.model.table_lookups()))
        if mean_pooling > 0 and stream.pooling.size:
            self.pooling_ratio = stream.pooling.sum(axis=1) / mean_pooling
        else:
            self.pooling_ratio = np.ones(n)
        # 查询流未抽取热表命中比例时全部为1
        self.sampled_hits = not np.all(stream.hot_hits == 1.0)

        self.paths = [self._build_path(path) for path in sim.pipeline.paths]
        capacities = [path.capacity_qps(self.calibration) for path in sim.pipeline.paths]
        finite = [c for c in capacities if math.isfinite(c) and c > 0]
        fallback = max(finite) if finite else 1.0
        self.weights = [c if math.isfinite(c) and c > 0 else fallback for c in capacities]
        self.current = [0.0] * len(self.paths)

    # 1.构建阶段与队列
    def _build_path(self, path: PipelinePath) -> _PathRuntime:
        host = [s for s in path.stages if s.device == "host"]
        accel = next((s for s in path.stages if s.device == "accel"), None)
        runtime = _PathRuntime(path=path, host=host, accel=accel)
        capacity = self.calibration.intermediate_queue_capacity

        inputs = [simpy.Store(self.env) for _ in range(host[0].workers)]
        runtime.first_queues = inputs
        for queue in inputs:
            self.env.process(self._host_worker(runtime, 0, queue))
        for index in range(1, len(host)):
            shared = simpy.Store(self.env, capacity=capacity)
            for _ in range(host[index].workers):
                self.env.process(self._host_worker(runtime, index, shared))
            runtime.links[index] = shared
        if accel is not None:
            runtime.batches = simpy.Store(self.env, capacity=capacity)
            for _ in range(accel.workers):
                handoff = simpy.Store(self.env, capacity=1)
                self.env.process(self._accel_loader(runtime, handoff))
                self.env.process(self._accel_compute(runtime, handoff))
        return runtime

    # 2.分发
    def _route(self) -> int:
        """平滑加权轮询，按各路径容量比例分配查询"""
        total = sum(self.weights)
        for index, weight in enumerate(self.weights):
            self.current[index] += weight
        chosen = max(range(len(self.paths)), key=lambda i: self.current[i])
        self.current[chosen] -= total
        return chosen

    def _dispatcher(self):  # noqa: ANN202
        env = self.env
        max_queue = self.calibration.max_queue_subqueries
        for query in range(len(self.stream)):
            arrival = float(self.stream.arrival_times[query])
            if arrival > env.now:
                yield env.timeout(arrival - env.now)
            runtime = self.paths[self._route()]
            batch = runtime.host[0].batch
            size = int(self.stream.sizes[query])
            chunks = [batch] * (size // batch)
            if size % batch:
                chunks.append(size % batch)
            workers = len(runtime.first_queues)
            targets = [(runtime.next_worker + i) % workers for i in range(len(chunks))]
            if any(len(runtime.first_queues[t].items) >= max_queue for t in targets):
                self.dropped[query] = True
                continue
            runtime.next_worker = (runtime.next_worker + len(chunks)) % workers
            self.remaining[query] = size
            for target, items in zip(targets, chunks, strict=True):
                runtime.first_queues[target].put(_Piece(query, items, env.now))

    # 3.主机线程
    def _host_service(self, stage: Stage, piece: _Piece) -> tuple[float, float, float, float]:
        """返回 (总时间, 嵌入读取, 计算, 拷贝)"""
        items = piece.items
        scale = float(self.pooling_ratio[piece.query])
        if stage.lookup_fraction < 1.0 and self.sampled_hits:
            miss = 1.0 - float(self.stream.hot_hits[piece.query])
            scale *= miss / stage.lookup_fraction if stage.lookup_fraction > 0 else 0.0
        sparse = stage.sparse_per_item_s * items * scale
        comm = stage.comm_per_item_s * items
        compute = stage.overhead_s + (stage.per_item_s - stage.sparse_per_item_s - stage.comm_per_item_s) * items
        compute = max(compute, 0.0)
        return sparse + comm + compute, sparse, compute, comm

    def _host_worker(self, runtime: _PathRuntime, index: int, queue: simpy.Store):  # noqa: ANN202
        env = self.env
        stage = runtime.host[index]
        cores_per_worker = stage.cores / stage.workers if stage.workers else 0.0
        while True:
            piece = yield queue.get()
            piece.breakdown[QUEUE] += env.now - piece.enqueued_at
            total, sparse, compute, comm = self._host_service(stage, piece)
            start = env.now
            yield env.timeout(total)
            self.meter.add(CPU, start, env.now, cores_per_worker)
            if stage.memory_s_per_item > 0 and total > 0:
                scale = sparse / stage.sparse_per_item_s / piece.items if stage.sparse_per_item_s > 0 else 1.0
                memory_busy = stage.memory_s_per_item * piece.items * scale
                self.meter.add(MEMORY, start, env.now, memory_busy / total)
            piece.breakdown[LOAD] += sparse
            piece.breakdown[COMPUTE] += compute
            piece.breakdown[COMM] += comm
            piece.enqueued_at = env.now
            if index + 1 < len(runtime.host):
                yield runtime.links[index + 1].put(piece)
            elif runtime.accel is not None:
                yield from self._fuse(runtime, piece)
            else:
                self._complete(piece)

    # 4.加速器
    def _fuse(self, runtime: _PathRuntime, piece: _Piece):  # noqa: ANN202
        buffer = runtime.fusion
        batch = runtime.accel.batch
        buffer.pieces.append(piece)
        buffer.items += piece.items
        if len(buffer.pieces) == 1:
            self._arm_timer(runtime)
        while buffer.items >= batch:
            taken: list[_Piece] = []
            need = batch
            while need > 0:
                head = buffer.pieces[0]
                if head.items <= need:
                    taken.append(buffer.pieces.pop(0))
                    need -= head.items
                else:
                    taken.append(head.split(need))
                    need = 0
            buffer.items -= batch
            buffer.generation += 1
            if buffer.pieces:
                self._arm_timer(runtime)
            yield runtime.batches.put(taken)

    def _arm_timer(self, runtime: _PathRuntime) -> None:
        timeout = runtime.path.fusion_timeout_s
        if math.isfinite(timeout):
            self.env.process(self._fusion_timer(runtime, runtime.fusion.generation, timeout))

    def _fusion_timer(self, runtime: _PathRuntime, generation: int, timeout: float):  # noqa: ANN202
        yield self.env.timeout(timeout)
        buffer = runtime.fusion
        if buffer.generation != generation or not buffer.pieces:
            return
        taken = buffer.pieces
        buffer.pieces = []
        buffer.items = 0
        buffer.generation += 1
        yield runtime.batches.put(taken)

    def _accel_loader(self, runtime: _PathRuntime, handoff: simpy.Store):  # noqa: ANN202
        env = self.env
        stage = runtime.accel
        while True:
            pieces = yield runtime.batches.get()
            for piece in pieces:
                piece.breakdown[QUEUE] += env.now - piece.enqueued_at
            yield env.timeout(stage.data_load_s)
            for piece in pieces:
                piece.breakdown[LOAD] += stage.data_load_s
                piece.enqueued_at = env.now
            yield handoff.put(pieces)

    def _accel_compute(self, runtime: _PathRuntime, handoff: simpy.Store):  # noqa: ANN202
        env = self.env
        stage = runtime.accel
        interval = stage.interval_s
        while True:
            pieces = yield handoff.get()
            for piece in pieces:
                piece.breakdown[QUEUE] += env.now - piece.enqueued_at
            yield env.timeout(stage.compute_s)
            self.meter.add(ACCEL, env.now - interval, env.now, 1.0 / stage.workers)
            for piece in pieces:
                piece.breakdown[COMPUTE] += stage.compute_s
                self._complete(piece)

    # 5.完成与统计
    def _complete(self, piece: _Piece) -> None:
        query = piece.query
        self.remaining[query] -= piece.items
        if self.remaining[query] <= 0 and not self.dropped[query]:
            self.finish[query] = self.env.now
            self.breakdown[query] = piece.breakdown

    def execute(self) -> SimReport:
        self.env.process(self._dispatcher())
        self.env.run(until=self.duration_s)

        # 结束时滞留在融合缓冲中的查询视为丢弃
        for runtime in self.paths:
            for piece in runtime.fusion.pieces:
                if np.isnan(self.finish[piece.query]):
                    self.dropped[piece.query] = True

        arrivals = len(self.stream)
        done = ~np.isnan(self.finish)
        completed = int(done.sum())
        dropped = int((self.dropped & ~done).sum())
        in_flight = arrivals - completed - dropped

        window = self.duration_s - self.warm_start
        in_window = done & (self.finish >= self.warm_start) & (self.finish <= self.duration_s)
        achieved = float(in_window.sum()) / window if window > 0 else 0.0

        arrival_times = self.stream.arrival_times
        measured = done & (arrival_times >= self.warm_start)
        latencies = self.finish[measured] - arrival_times[measured]
        if latencies.size:
            mean = float(latencies.mean())
            # 极度右偏的分布中分位数可能低于均值，此时按均值报告
            tail = max(float(np.percentile(latencies, self.calibration.tail_percentile)), mean)
            parts = self.breakdown[measured].mean(axis=0)
            busy = float(parts[LOAD] + parts[COMPUTE] + parts[COMM])
            breakdown = StageLatency(
                queueing_s=max(mean - busy, 0.0),
                data_load_s=float(parts[LOAD]),
                compute_s=float(parts[COMPUTE]),
                comm_s=float(parts[COMM]),
            )
        else:
            tail = mean = math.inf
            breakdown = StageLatency()

        utilization, avg_power, peak_power = self._power()
        offered = arrivals / self.duration_s
        report = SimReport(
            offered_qps=offered,
            achieved_qps=min(achieved, offered) if offered > 0 else 0.0,
            tail_latency_s=tail,
            mean_latency_s=mean,
            latency_breakdown=breakdown,
            utilization=utilization,
            avg_power_w=avg_power,
            peak_power_w=peak_power,
            arrivals=arrivals,
            completed=completed,
            dropped=dropped,
            in_flight=in_flight,
            measured=int(latencies.size),
            query_latencies=latencies.tolist(),
        )
        logger.debug(
            "仿真%s@%s %s: offered=%.1f achieved=%.1f tail=%.4fs dropped=%d",
            self.sim.model.name, self.sim.server.name, self.sim.cfg.strategy.name,
            offered, report.achieved_qps, tail, dropped,
        )
        return report

    def _power(self) -> tuple[Utilization, float, float]:
        """按功耗窗口计算利用率与功耗"""
        widths = self.meter.widths
        cores = self.sim.server.cpu.cores
        powers = []
        for index, width in enumerate(widths):
            if width <= 0:
                continue
            util = Utilization(
                cpu=self.meter.busy[CPU, index] / (cores * width),
                memory=self.meter.busy[MEMORY, index] / width,
                accel=self.meter.busy[ACCEL, index] / width,
            ).clipped()
            powers.append((width, power_draw(self.sim.server, self.sim.cfg, util, self.calibration)))
        total = float(widths.sum())
        busy = self.meter.busy.sum(axis=1)
        utilization = Utilization(
            cpu=busy[CPU] / (cores * total) if total > 0 else 0.0,
            memory=busy[MEMORY] / total if total > 0 else 0.0,
            accel=busy[ACCEL] / total if total > 0 else 0.0,
        ).clipped()
        if not powers:
            idle = power_draw(self.sim.server, self.sim.cfg, Utilization(), self.calibration)
            return utilization, idle, idle
        avg = sum(w * p for w, p in powers) / sum(w for w, _ in powers)
        peak = max(p for _, p in powers)
        return utilization, avg, max(peak, avg)


def simulate(
    server: ServerSpec,
    model: ModelSpec,
    plan: PartitionPlan | None,
    cfg: SchedConfig,
    stream: QueryStream,
    duration_s: float,
    seed: int = 0,
    calibration: Calibration = DEFAULT_CALIBRATION,
    sla_ms: float | None = None,
) -> SimReport:
    """执行一次仿真

    划分方案命中率低于1且查询流未携带命中比例时，用 seed 按二项分布为每个查询抽取热表命中比例，
    未命中的查找由主机承担；事件循环本身没有随机性，相同输入与种子得到相同结果
    """
    hot_hit_rate = 1.0
    if plan is not None:
        if plan.server != server.name or plan.model != model.name:
            error_msg = f"划分方案属于{plan.model}@{plan.server}，与{model.name}@{server.name}不一致"
            raise ValidateErrorException(error_msg)
        if cfg.strategy.uses_accel:
            hot_hit_rate = plan.hot_hit_rate
    if hot_hit_rate < 1.0 and np.all(stream.hot_hits == 1.0):
        rng = np.random.default_rng(seed)
        stream = replace(stream, hot_hits=sample_hot_hits(rng, stream.sizes, stream.pooling, hot_hit_rate))
    simulator = ServerSimulator(model, server, cfg, calibration, hot_hit_rate, sla_ms)
    return simulator.run(stream, duration_s)
