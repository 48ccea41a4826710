# src/app_commands/criterion_command.py
import argparse
import logging

from src.core.nuclearity import classify_regime, compare_sr_kappa, gl_condition, kappa_sum, s_r_sum
from src.utils.symbol_parser import parse_number, parse_symbol

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser(
        "criterion", parents=[common], argument_default=argparse.SUPPRESS,
        help="r-核型の判定和 (ϰ または s_r)",
    )
    parser.add_argument("--p1", type=parse_number)
    parser.add_argument("--p2", type=parse_number)
    parser.add_argument("--r", type=parse_number)
    parser.add_argument("--gl-order", dest="gl_order", type=parse_number,
                        help="r を 1/r = 1 + |1/p − 1/2| で決める")
    parser.add_argument("--method", choices=["kappa", "s_r"])
    parser.add_argument("--compare", action="store_true", help="N と 2N での s_r/ϰ の比も出力する")


def resolve_order(config):
    if config.gl_order is not None:
        r = gl_condition(config.gl_order)
        logger.debug(f"--gl-order {config.gl_order} から r={r} を得ました。")
        return r
    return 1.0 if config.r is None else config.r


def run(config):
    m = parse_symbol(config.symbol, config.n)
    r = resolve_order(config)
    if config.method == "s_r":
        report = s_r_sum(m, config.p1, config.p2, r, N=config.N, tol=config.tol)
        case = None
    else:
        case = classify_regime(config.p1, config.p2, r, k=config.k)
        report = kappa_sum(m, case, N=config.N, tol=config.tol)

    payload = {"command": "criterion", "symbol": m.to_dict(), "report": report.to_dict()}
    if config.compare:
        case = case or classify_regime(config.p1, config.p2, r, k=config.k)
        extra = {} if config.N is None else {"N": config.N}
        payload["comparison"] = compare_sr_kappa(m, case, tol=config.tol, **extra).to_dict()
    return payload
