# conftest.py
import os
import sys

import pytest

# src.* をインポートできるようにプロジェクトのルートをsys.pathに追加
project_root = os.path.abspath(os.path.dirname(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.utils.settings import reset_settings  # noqa: E402


@pytest.fixture(autouse=True)
def fresh_settings():
    reset_settings()
    yield
    reset_settings()
