# src/app_commands/norms_command.py
import argparse
import logging

from src.core.hermite_core import MultiIndex
from src.core.quadrature import estimate_norm, fit_norm_exponent
from src.utils.symbol_parser import parse_number

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser(
        "norms", parents=[common], argument_default=argparse.SUPPRESS,
        help="‖φ_ν‖_p の求積値と漸近モデルの比較",
    )
    parser.add_argument("--p", type=parse_number, nargs="+", help="Lebesgue 指数 (inf, 4/3 なども可)")
    parser.add_argument("--nu", type=int, nargs="+", help="次数 (n 次元では (ν, …, ν))")
    parser.add_argument("--fit", action="store_true", help="log-log の傾きのフィットも出力する")
    parser.add_argument("--fit-range", dest="fit_range", type=int, nargs=2, metavar=("LO", "HI"))
    parser.add_argument("--samples", type=int, help="フィットに使う次数の個数")


def run(config):
    rows = []
    for p in config.p:
        for degree in config.nu:
            nu = MultiIndex((degree,) * config.n)
            estimate = estimate_norm(nu, p, k=config.k, tol=config.tol)
            row = estimate.to_dict()
            row["nu"] = str(nu)
            rows.append(row)
    payload = {"command": "norms", "rows": rows}

    if config.fit:
        lo, hi = config.fit_range
        fits = []
        for p in config.p:
            logger.info(f"p={p}: 次数 {lo}..{hi} でフィットしています...")
            fit = fit_norm_exponent(p, (lo, hi), config.samples, tol=config.tol)
            fits.append({k: v for k, v in fit.to_dict().items() if k not in ("degrees", "norms")})
        payload["fits"] = fits
    return payload
