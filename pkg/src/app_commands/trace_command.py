# src/app_commands/trace_command.py
import argparse
import dataclasses

from src.core.trace_lab import spectral_trace_check, trace_report
from src.utils.symbol_parser import parse_number, parse_symbol


def register(subparsers, common):
    parser = subparsers.add_parser(
        "trace", parents=[common], argument_default=argparse.SUPPRESS,
        help="シンボルの和・対角の求積・閉形式によるトレース",
    )
    parser.add_argument("--gl-order", dest="gl_order", type=parse_number,
                        help="L^p 上のスペクトルトレースの照合も行う (p を指定)")


def run(config):
    m = parse_symbol(config.symbol, config.n)
    report = trace_report(m, config.n, tol=config.tol)
    if config.gl_order is not None:
        spectral = spectral_trace_check(m, config.gl_order, config.n, tol=config.tol)
        report = dataclasses.replace(report, spectral=spectral)
    return {"command": "trace", "symbol": m.to_dict(), "report": report.to_dict()}
