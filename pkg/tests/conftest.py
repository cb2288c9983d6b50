# tests/conftest.py
"""
共享测试夹具

小规模合成数据与小模型配置，保证单元测试在 CPU 上数秒内完成；
标记为 slow 的端到端验收测试默认跳过，使用 --run-slow 运行。
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ape_system.core.events import EventBus
from ape_system.core.model_config import LevTConfig, MSTConfig, NoiseConfig, TrainConfig
from ape_system.domain.services.synthgen import gen_corpus, gen_lexicon, gen_relation_lexicons


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="运行端到端训练验收测试")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def lexicon():
    return gen_lexicon(30, 0.5, seed=3)


@pytest.fixture(scope="session")
def small_corpus(lexicon):
    return gen_corpus(lexicon, 40, (3, 7), NoiseConfig(0.1, 0.05, 0.05), constraint_rate=0.5, seed=3,
                      name="small")


@pytest.fixture(scope="session")
def relations(lexicon):
    return gen_relation_lexicons(lexicon, synonyms_per_word=2, antonyms_per_word=1, seed=3)


@pytest.fixture
def mst_config():
    return MSTConfig(d_model=32, n_heads=2, n_layers=1, ffn_dim=64, factor_embed_dim=8, dropout=0.0,
                     max_len=48, variant="append")


@pytest.fixture
def levt_config():
    return LevTConfig(d_model=32, n_heads=2, n_layers=1, ffn_dim=64, factor_embed_dim=8, dropout=0.0,
                      max_len=48, variant="append", max_iterations=3, max_insert_per_slot=4)


@pytest.fixture
def train_config():
    return TrainConfig(steps=4, batch_size=8, learning_rate=1e-3, warmup_steps=2, log_every=1, seed=5,
                       rollin_warmup_steps=2, plot_loss_curve=False)


@pytest.fixture
def bus():
    """独立事件总线，避免测试之间通过全局总线互相影响"""
    return EventBus()
