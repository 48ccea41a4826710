# src/app_commands/kernel_command.py
import argparse

import numpy as np

from src.core.spectral_ops import heat_symbol, kernel_series, mehler_kernel
from src.utils.settings import get_settings
from src.utils.symbol_parser import parse_number

# 評価点は [-3, 3]ⁿ から一様に取る
POINT_RADIUS = 3.0


def register(subparsers, common):
    parser = subparsers.add_parser(
        "kernel", parents=[common], argument_default=argparse.SUPPRESS,
        help="Mehler 核と打ち切り級数の比較",
    )
    parser.add_argument("--t", type=parse_number, nargs="+")
    parser.add_argument("--points", type=int, help="t ごとの評価点の組の数")
    parser.add_argument("--seed", type=int, help="評価点の乱数シード")


def run(config):
    rng = np.random.default_rng(config.seed)
    n = config.n
    N = get_settings().default_truncation if config.N is None else config.N
    rows = []
    for t in config.t:
        m = heat_symbol(t, n)
        samples = rng.uniform(-POINT_RADIUS, POINT_RADIUS, size=(config.points, 2, n))
        for x, y in samples:
            series = kernel_series(m, x, y, N)
            closed = mehler_kernel(t, x, y)
            row = {"t": t}
            row.update({f"x_{j + 1}": float(v) for j, v in enumerate(x)})
            row.update({f"y_{j + 1}": float(v) for j, v in enumerate(y)})
            row.update({
                "series": series.value,
                "mehler": closed,
                "abs_error": abs(series.value - closed),
                "tail_bound": series.tail_bound,
            })
            rows.append(row)
    return {"command": "kernel", "rows": rows}
