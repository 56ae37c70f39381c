import os
from pathlib import Path
import dynaconf


class Singleton(type):
    _instances = {}

    def __call__(cls, *args, **kwargs):
        app_env = kwargs.get('app_env', None)
        key = (cls, app_env)

        if key not in cls._instances:
            cls._instances[key] = super(Singleton, cls).__call__(*args, **kwargs)
        return cls._instances[key]


def _as_bool(value):
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ('1', 'true', 'yes', 'on')


def _as_list(value):
    if isinstance(value, (list, tuple)):
        return [str(item).strip() for item in value]
    return [item.strip() for item in str(value).split(',') if item.strip()]


class TensorCiqConfiguration(metaclass=Singleton):

    def __init__(self, app_env=None):
        if app_env is None:
            app_env = os.environ.get("APP_ENV") or "local"
        self.app_env = app_env
        base_dir = Path(__file__).resolve().parent.parent
        config_file_path = base_dir / 'config' / '{}.ini'.format(app_env)

        self.settings = dynaconf.Dynaconf(
            envvar_prefix="TENSORCIQ",
            settings_files=[config_file_path]
        )

    @property
    def logging(self):
        return self.get("logging")

    @property
    def estimator(self):
        return self._get_estimator_config()

    @property
    def uq(self):
        return self._get_uq_config()

    @property
    def harness(self):
        return self._get_harness_config()

    @property
    def tool_version(self):
        return str(self.get("cli").tool_version)

    def get(self, setting, default=None):
        return self.settings.get(setting, default)

    def _get_estimator_config(self):
        data = self.get("estimator")
        return {
            'step_constant': float(data["step_constant"]),
            'eps_th': float(data["eps_th"]),
            't0': int(data["t0"]),
            'restart_exponent': int(data["restart_exponent"]),
            'max_init_retries': int(data["max_init_retries"]),
            'eig_tol': float(data["eig_tol"]),
            'eig_maxiter_factor': int(data["eig_maxiter_factor"]),
            'dense_eig_max_d': int(data["dense_eig_max_d"]),
            'early_stop': _as_bool(data["early_stop"]),
            'early_stop_tol': float(data["early_stop_tol"]),
            'orbit_size': int(data["orbit_size"]),
            'step_rule': str(data["step_rule"]).strip().lower(),
            'step_reference_norm': float(data["step_reference_norm"]),
        }

    def _get_uq_config(self):
        data = self.get("uq")
        return {
            'max_gram_condition': float(data["max_gram_condition"]),
            'negative_variance_tol': float(data["negative_variance_tol"]),
            'exhaustive_permutation_max_r': int(data["exhaustive_permutation_max_r"]),
        }

    def _get_harness_config(self):
        data = self.get("harness")
        return {
            'entry_sample': int(data["entry_sample"]),
            'jobs': int(data["jobs"]),
            'hit_tolerance': float(data["hit_tolerance"]),
            'qq_factor_locations': [tuple(int(x) for x in loc.split(':'))
                                    for loc in _as_list(data["qq_factor_locations"])],
            'qq_entry_locations': [tuple(int(x) for x in loc.split(':'))
                                   for loc in _as_list(data["qq_entry_locations"])],
        }
