from argparse import Namespace

import pytest

from app.api.middlewares.logger_middleware import log_command


def test_log_command_reports_start_and_exit(mocker):
    info = mocker.patch('app.api.middlewares.logger_middleware.logger.info')

    @log_command('demo')
    def handler(args):
        return 0

    assert handler(Namespace(value=3, handler=None)) == 0
    messages = [call.args[0] for call in info.call_args_list]
    assert messages[0] == "----> Command: demo {'value': 3}"
    assert messages[1].startswith('End command: demo, Exit code: 0')


def test_log_command_still_logs_when_handler_raises(mocker):
    info = mocker.patch('app.api.middlewares.logger_middleware.logger.info')

    @log_command('demo')
    def handler(args):
        raise ValueError('boom')

    with pytest.raises(ValueError):
        handler(Namespace())
    assert 'Exit code: raised' in info.call_args_list[-1].args[0]
