"""Точка входа CLI тулкита"""
import argparse
import logging
import sys
from typing import List, Optional

from risradar import __version__
from risradar.config import Config
from risradar.constants import ExitCode, PipelineStage, SweepKind
from risradar.handlers.commands import cmd_estimate, cmd_rerun, cmd_simulate, cmd_sweep, cmd_train
from risradar.utils.errors import exit_code_for, get_user_friendly_message
from risradar.utils.logging_setup import setup_logging

logger = logging.getLogger(__name__)

STAGES = [s.value for s in PipelineStage]
SWEEPS = [s.value for s in SweepKind]


def build_parser() -> argparse.ArgumentParser:
    """Парсер с подкомандами simulate, estimate, train, sweep, rerun"""
    parser = argparse.ArgumentParser(
        prog="risradar",
        description="Подавление помех OFDM-радара с помощью RIS: моделирование, обучение, прогоны",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Синтезировать сетку наблюдений")
    simulate.add_argument("--config", required=True, help="Файл эксперимента (JSON)")
    simulate.add_argument("--out", default=Config.OUTPUT_DIR, help="Каталог результатов")
    simulate.add_argument("--seed", type=int, help="Переопределить зерно сцены")
    simulate.add_argument("--stage", choices=STAGES, default=PipelineStage.RANDOM.value,
                          help="Конфигурация RIS для синтеза")

    estimate = sub.add_parser("estimate", help="Оценить углы по сетке и конфигурации RIS")
    estimate.add_argument("--grid", required=True, help="Файл grid.bin")
    estimate.add_argument("--ris", required=True, help="CSV конфигурации RIS")
    estimate.add_argument("--config", help="Файл эксперимента (настройки оценщика)")
    estimate.add_argument("--out", default=Config.OUTPUT_DIR, help="Каталог результатов")

    train = sub.add_parser("train", help="Обучить конфигурацию RIS для одного или нескольких β")
    train.add_argument("--config", required=True, help="Файл эксперимента (JSON)")
    train.add_argument("--out", default=Config.OUTPUT_DIR, help="Каталог результатов")
    train.add_argument("--beta", type=float, nargs="+", help="Значения β в [0, 1]")
    train.add_argument("--seed", type=int, help="Переопределить зерно сцены")

    sweep = sub.add_parser("sweep", help="Экспериментальный прогон")
    sweep.add_argument("--config", required=True, help="Файл эксперимента (JSON)")
    sweep.add_argument("--out", default=Config.OUTPUT_DIR, help="Каталог результатов")
    sweep.add_argument("--sweep", choices=SWEEPS, help="Тип прогона (по умолчанию из конфигурации)")
    sweep.add_argument("--seed", type=int, help="Переопределить зерно сцены")
    sweep.add_argument("--stage", choices=STAGES, help="Ограничить INR-прогон одной стадией")
    sweep.add_argument("--workers", type=int, help="Размер пула процессов (по умолчанию RISRADAR_WORKERS)")

    rerun = sub.add_parser("rerun", help="Повторить прогон по манифесту и сверить контрольные суммы")
    rerun.add_argument("--manifest", required=True, help="manifest.json или каталог прогона")
    rerun.add_argument("--out", required=True, help="Новый каталог результатов")
    return parser


def run(args: argparse.Namespace) -> None:
    """Выполняет подкоманду"""
    if args.command == "simulate":
        cmd_simulate(config=args.config, out=args.out, seed=args.seed, stage=args.stage)
    elif args.command == "estimate":
        cmd_estimate(grid=args.grid, ris=args.ris, out=args.out, config=args.config)
    elif args.command == "train":
        cmd_train(config=args.config, out=args.out, beta=args.beta, seed=args.seed)
    elif args.command == "sweep":
        cmd_sweep(config=args.config, out=args.out, sweep=args.sweep, seed=args.seed,
                  stage=args.stage, workers=args.workers)
    elif args.command == "rerun":
        cmd_rerun(manifest=args.manifest, out=args.out)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Запуск CLI.

    Returns:
        Код завершения: 0 успех, 2 ошибка конфигурации, 3 несогласованные
        данные, 4 сбой обучения, 1 прочие ошибки
    """
    args = build_parser().parse_args(argv)

    # Проверяем конфигурацию процесса
    try:
        Config.validate()
    except ValueError as e:
        print(e, file=sys.stderr)
        return int(ExitCode.CONFIG_ERROR)

    setup_logging()
    logger.info(f"[CLI] risradar {__version__}: {args.command}")

    try:
        run(args)
    except Exception as e:
        code = exit_code_for(e)
        if code is ExitCode.FAILURE:
            logger.exception(f"[CLI] Непредвиденная ошибка: {e}")
        else:
            logger.error(f"[CLI] {type(e).__name__}: {e}")
        print(get_user_friendly_message(e), file=sys.stderr)
        return int(code)
    return int(ExitCode.SUCCESS)


if __name__ == "__main__":
    sys.exit(main())
