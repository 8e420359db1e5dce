"""
ClustSeg - Command Line Entry Point

To run:
    python -m clustseg <command> [options]

Commands are listed in config.COMMANDS. Every command also takes
--config FILE (key=value lines); flags override file values.

Environment Variables:
    CLUSTSEG_SEED - default seed when --seed is not given
    CLUSTSEG_DEBUG - debug logging on stderr
    CLUSTSEG_CHECK_INVARIANTS - test-mode invariant assertions

Exit codes: 0 ok, 1 usage error, 2 data error.
"""

import argparse
import sys
from datetime import datetime

from clustseg.config import APP_NAME, COMMANDS, VERSION
from clustseg.exceptions import EXIT_DATA, EXIT_OK, ClustSegError, UsageError
from clustseg.logs import elapsed, get_logger

log = get_logger("MAIN")


class _Parser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _command_module(command_id):
    if command_id == "cluster":
        from clustseg.commands import cluster
        return cluster
    elif command_id == "superpixel":
        from clustseg.commands import superpixel
        return superpixel
    elif command_id == "bench":
        from clustseg.commands import bench
        return bench
    elif command_id == "demo-decoder":
        from clustseg.commands import demo_decoder
        return demo_decoder
    raise UsageError(f"unknown command {command_id!r}")


def build_parser():
    parser = _Parser(prog=APP_NAME, description="Clustering-as-attention toolkit")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for command in COMMANDS:
        cmd_parser = sub.add_parser(command["id"], help=command["name"], description=command["name"])
        cmd_parser.add_argument("--config", help="key=value run config file")
        _command_module(command["id"]).add_arguments(cmd_parser)
    return parser


def run_command(argv):
    """
    Parse argv and run one command

    Returns:
        (exit_code, message)
    """
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError(f"a command is required: {', '.join(c['id'] for c in COMMANDS)}")
        start = datetime.now()
        code, message = _command_module(args.command).run(args)
        log.debug(f"{args.command} finished in {elapsed(start):.2f}s: {message}")
        return code, message
    except ClustSegError as e:
        return e.exit_code, str(e)
    except OSError as e:
        return EXIT_DATA, f"{e.filename or ''}: {e.strerror or e}"


def main(argv=None):
    """Main application entry point"""
    code, message = run_command(sys.argv[1:] if argv is None else argv)
    if code != EXIT_OK:
        sys.stderr.write(f"{APP_NAME}: error: {message}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
