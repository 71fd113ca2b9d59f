from pydantic import BaseModel

from .entities.model_entity import AttentionKind, ModelSpec, SizeClass

# 默认嵌入元素宽度（fp32）与稀疏索引宽度（int64）
ELEMENT_BYTES = 4
INDEX_BYTES = 8

# GRU 门数量
GRU_GATES = 3


class Footprint(BaseModel):
    """模型内存占用"""

    embedding_bytes: float
    dense_bytes: float

    @property
    def total_bytes(self) -> float:
        return self.embedding_bytes + self.dense_bytes

    @property
    def embedding_share(self) -> float:
        """嵌入表占总占用的比例"""
        if self.total_bytes == 0:
            return 0.0
        return self.embedding_bytes / self.total_bytes


def _chain(input_dim: int, widths: list[int]) -> list[tuple[int, int]]:
    """将全连接输出宽度列表展开为 (输入, 输出) 层对"""
    layers = []
    prev = input_dim
    for width in widths:
        layers.append((prev, width))
        prev = width
    return layers


def interaction_pairs(model: ModelSpec) -> int:
    """DLRM特征交互的两两点积数量"""
    if not model.bottom_fc:
        return 0
    vectors = model.num_emb_tables + 1
    return vectors * (vectors - 1) // 2


def predict_input_dim(model: ModelSpec) -> int:
    """预测全连接的输入宽度

    DLRM 为底部输出加两两点积，其余模型为全部嵌入向量拼接（注意力模型再加上被关注的序列向量）
    """
    if model.bottom_fc:
        return model.bottom_fc[-1] + interaction_pairs(model)
    width = model.num_emb_tables * model.emb_dim
    if model.attention_kind != AttentionKind.NONE:
        width += model.emb_dim
    return width


def dense_layers(model: ModelSpec) -> dict[str, list[tuple[int, int]]]:
    """稠密子图的全部全连接层，按所属单元分组"""
    return {
        "bottom": _chain(model.dense_input_dim, model.bottom_fc),
        "predict": _chain(predict_input_dim(model), model.predict_fc)
        * model.predict_fc_replicas,
        "attention": _chain(4 * model.emb_dim, model.attention_fc)
        if model.attention_kind != AttentionKind.NONE
        else [],
    }


def sequence_length(model: ModelSpec) -> float:
    """行为序列平均长度，非注意力模型为0"""
    if model.sequence_lookups is None or model.attention_kind == AttentionKind.NONE:
        return 0.0
    return model.sequence_lookups.midpoint


def gru_flops_per_step(model: ModelSpec) -> float:
    """GRU单步浮点运算量，隐层宽度等于嵌入维度"""
    if model.attention_kind != AttentionKind.GRU:
        return 0.0
    hidden = model.emb_dim
    return 2.0 * GRU_GATES * (model.emb_dim + hidden) * hidden


def dense_flops_per_item(model: ModelSpec) -> float:
    """单个样本的稠密子图浮点运算量"""
    layers = dense_layers(model)
    flops = sum(2.0 * i * o for i, o in layers["bottom"] + layers["predict"])
    flops += 2.0 * interaction_pairs(model) * model.emb_dim
    seq = sequence_length(model)
    flops += seq * sum(2.0 * i * o for i, o in layers["attention"])
    flops += seq * gru_flops_per_step(model)
    return flops


def dense_op_count(model: ModelSpec) -> int:
    """稠密子图的算子数量（含交互/拼接算子）"""
    layers = dense_layers(model)
    count = sum(len(v) for v in layers.values()) + 1
    if model.attention_kind == AttentionKind.GRU:
        count += 1
    return count


def sparse_bytes_per_item(model: ModelSpec, bytes_per_element: int = ELEMENT_BYTES) -> float:
    """单个样本在全部嵌入表上读取的字节数"""
    return sum(model.table_lookups()) * model.emb_dim * bytes_per_element


def index_bytes_per_item(model: ModelSpec, index_bytes: int = INDEX_BYTES) -> float:
    """单个样本的稀疏索引字节数"""
    return sum(model.table_lookups()) * index_bytes


def pooled_bytes_per_item(model: ModelSpec, bytes_per_element: int = ELEMENT_BYTES) -> float:
    """稀疏子图输出（池化后）的字节数，不做池化的序列表按原样输出"""
    row = model.emb_dim * bytes_per_element
    if model.has_pooling:
        return model.num_emb_tables * row
    return sum(model.table_lookups()) * row


def dense_input_bytes_per_item(model: ModelSpec, bytes_per_element: int = ELEMENT_BYTES) -> float:
    """单个样本的稠密特征输入字节数"""
    return model.dense_input_dim * bytes_per_element


def dense_weight_bytes(model: ModelSpec, bytes_per_element: int = ELEMENT_BYTES) -> float:
    """稠密子图权重字节数（含偏置）"""
    params = 0.0
    for layers in dense_layers(model).values():
        params += sum(i * o + o for i, o in layers)
    if model.attention_kind == AttentionKind.GRU:
        hidden = model.emb_dim
        params += GRU_GATES * ((model.emb_dim + hidden) * hidden + hidden)
    return params * bytes_per_element


def table_bytes(model: ModelSpec, size_class: SizeClass, bytes_per_element: int = ELEMENT_BYTES) -> float:
    """单张嵌入表的字节数"""
    return model.rows(size_class) * model.emb_dim * bytes_per_element


def model_footprint(
    model: ModelSpec,
    size_class: SizeClass = SizeClass.PROD,
    bytes_per_element: int = ELEMENT_BYTES,
) -> Footprint:
    """计算模型内存占用，行数取区间中点"""
    return Footprint(
        embedding_bytes=model.num_emb_tables * table_bytes(model, size_class, bytes_per_element),
        dense_bytes=dense_weight_bytes(model, bytes_per_element),
    )
