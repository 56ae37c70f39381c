import argparse
import sys

from app.api.v1.resources import complete, experiment, simulate, uq
from app.exceptions.exception_handlers import handle_exception


def add_routes(subparsers):
    simulate.register(subparsers)
    complete.register(subparsers)
    uq.register(subparsers)
    experiment.register(subparsers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tensorciq',
                                     description='Noisy symmetric tensor completion with entrywise confidence '
                                                 'intervals')
    subparsers = parser.add_subparsers(dest='command', required=True)
    add_routes(subparsers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.handler(args)
    except Exception as e:
        return handle_exception(e)


if __name__ == '__main__':
    sys.exit(main())
