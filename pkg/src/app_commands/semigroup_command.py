# src/app_commands/semigroup_command.py
import argparse

from src.core.spectral_ops import heat_symbol
from src.core.trace_lab import trace_report
from src.utils.symbol_parser import parse_number


def register(subparsers, common):
    parser = subparsers.add_parser(
        "semigroup", parents=[common], argument_default=argparse.SUPPRESS,
        help="Tr(e^{-tH}) を 3 通りの方法で計算した表",
    )
    parser.add_argument("--t", type=parse_number, nargs="+")


def run(config):
    rows = []
    for t in config.t:
        report = trace_report(heat_symbol(t, config.n), config.n, tol=min(config.tol, 1e-10))
        rows.append({
            "t": t,
            "n": config.n,
            "symbol_sum": report.symbol_sum,
            "diagonal_quadrature": report.diagonal_quadrature,
            "closed_form": report.closed_form,
            "tail_bound": report.tail_bound,
            "N": report.truncation_order,
        })
    return {"command": "semigroup", "rows": rows}
