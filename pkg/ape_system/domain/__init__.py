# ape_system/domain/__init__.py
"""
领域层
entities: 数据实体；services: 编码/分词/挖掘/增强等纯函数服务；
models: 神经网络模型；analysis: 评测指标
"""
