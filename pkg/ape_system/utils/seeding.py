# ape_system/utils/seeding.py
"""随机种子工具：统一设置 random / numpy / torch"""
import random

import numpy as np
import torch


def set_global_seed(seed: int) -> None:
    """设置全部随机源，保证同种子可复现"""
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)


def make_rng(*seed_parts: int) -> np.random.Generator:
    """由若干整数派生独立的 numpy 随机数生成器"""
    return np.random.default_rng(list(seed_parts) if len(seed_parts) > 1 else seed_parts[0])


__all__ = ['set_global_seed', 'make_rng']
