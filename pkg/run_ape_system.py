# run_ape_system.py
#!/usr/bin/env python3
"""
APE 工具包启动脚本
放在项目根目录下运行，例如：
    python run_ape_system.py gen-synthetic --output-dir runs/synth
"""

import sys
import os

# 添加项目根目录到Python路径
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)

from ape_system.main import main

if __name__ == "__main__":
    sys.exit(main())
